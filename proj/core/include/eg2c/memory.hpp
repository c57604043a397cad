#pragma once

#include <cstddef>
#include <cstdint>

namespace eg2c {

// On-chip memory map. The six data regions sum to 104 KB; the 4K-word
// instruction SRAM is sized separately.
struct MemoryConfig {
  size_t weight_gb = 65536;
  size_t index_sram = 8192;
  size_t act_gb_a = 14336;
  size_t act_gb_b = 14336;
  size_t in_act_buf = 2048;
  size_t out_act_buf = 2048;
  size_t instr_words = 4096;
  size_t prep_bandwidth = 32;  // act bytes staged per cycle

  size_t data_bytes() const {
    return weight_gb + index_sram + act_gb_a + act_gb_b + in_act_buf + out_act_buf;
  }
};

}  // namespace eg2c
