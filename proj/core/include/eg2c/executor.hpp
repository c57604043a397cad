#pragma once

#include <cstdint>
#include <vector>

#include "eg2c/model.hpp"
#include "eg2c/tensor.hpp"

namespace eg2c {

// Per-layer observations from a forward pass. Used by shift calibration
// (max_abs_acc) and by tests that check layer-by-layer behaviour.
struct ForwardTrace {
  std::vector<int32_t> max_abs_acc;    // largest |accumulator| before shift
  std::vector<ActTensor> outputs;      // post-requantization layer outputs
};

// Run one layer: int32 accumulation of act x decoded weight over the
// receptive field (same padding with zeros), arithmetic right shift by
// requant_shift, activation, clamp to the signed outbits range.
ActTensor run_layer(const LayerSpec& layer, const LayerWeights& weights,
                    const Tensor& input, int32_t* max_abs_acc = nullptr);

// Reference executor: runs the whole stack, feeding each 8-bit output to
// the next layer. Deterministic and bit-exact; this is the correctness
// baseline the sparse/scheduled engine is checked against.
ActTensor dense_forward(const ModelSpec& model, const ModelWeights& weights,
                        const Tensor& input, ForwardTrace* trace = nullptr);

}  // namespace eg2c
