#pragma once

// Internal helpers shared by the assembler and the simulator: the packed
// byte layout of a layer's weight and index streams, and the input rows a
// wave needs staged. Keeping both sides on one implementation is what
// makes a program plus its model a complete preload description.

#include <cstdint>
#include <vector>

#include "eg2c/dataflow.hpp"
#include "eg2c/model.hpp"
#include "eg2c/sparse.hpp"

namespace eg2c::detail {

// Dense storage footprint: po2 codes pack two per byte, low nibble first.
inline uint64_t dense_payload_bytes(const LayerSpec& layer) {
  const uint64_t n = layer.weight_count();
  return layer.quant == QuantMode::Po2_4bit ? (n + 1) / 2 : n;
}

std::vector<uint8_t> pack_dense(const LayerSpec& layer,
                                const LayerWeights& weights);

// Sparse payload: per surviving vector, 3 int8 bytes, or 3 po2 codes in
// 2 bytes (codes 0 and 1 in the first byte, code 2 in the second).
std::vector<uint8_t> pack_sparse_payload(const LayerSpec& layer,
                                         const SparseLayer& sparse);

// Little-endian u16 per surviving vector, canonical order.
std::vector<uint8_t> pack_indices(const SparseLayer& sparse);

LayerWeights unpack_dense(const LayerSpec& layer,
                          const std::vector<uint8_t>& bytes);

SparseLayer unpack_sparse(const LayerSpec& layer,
                          const std::vector<uint8_t>& payload,
                          const std::vector<uint8_t>& indices);

// Distinct (channel, input row) pairs a wave reads, in first-use order.
// Zero-padding rows are not staged. FC layers stage the whole flattened
// input with their first wave instead.
struct StagedRow {
  uint16_t channel = 0;
  uint16_t row = 0;
};

// Adds the rows one item reads to the set (deduplicating); FC items add
// nothing. At most three rows per item, so any sane buffer fits one item.
void append_item_rows(const LayerSpec& layer, const WorkItem& item,
                      std::vector<StagedRow>& set);

void wave_staged_rows(const LayerSpec& layer, const LaneSchedule& sched,
                      const Wave& wave, std::vector<StagedRow>& out);

// Bytes the staging engine moves for this wave.
uint64_t wave_staging_bytes(const LayerSpec& layer, const LaneSchedule& sched,
                            size_t wave_index, std::vector<StagedRow>& scratch);

}  // namespace eg2c::detail
