#pragma once

#include <cstdint>
#include <random>

#include "eg2c/model.hpp"
#include "eg2c/tensor.hpp"

// Straight-line reimplementation of the layer semantics used as the
// comparison baseline. Everything here is written from the documented
// arithmetic rules (floor shifts, same padding, tap ordering) without
// calling into the library's executor, so a bug shared between the
// engine and its golden model would still be caught.
namespace oracle {

struct Counters {
  uint64_t macs = 0;  // every tap, zero weights and padding included
};

// One weight applied to one activation: int8 multiply, or sign/exponent
// shift for the 4-bit power-of-two code (0xF = zero).
int64_t mac_once(eg2c::QuantMode mode, uint8_t raw, int64_t act);

eg2c::ActTensor forward_layer(const eg2c::LayerSpec& layer,
                              const eg2c::LayerWeights& weights,
                              const eg2c::Tensor& input,
                              Counters* counters = nullptr);

eg2c::ActTensor forward_model(const eg2c::ModelSpec& model,
                              const eg2c::ModelWeights& weights,
                              const eg2c::Tensor& input,
                              Counters* counters = nullptr);

// Random single-layer model sized to fit the default memory map, with
// weights drawn over the full code space (zeros included).
struct RandomLayer {
  eg2c::ModelSpec model;
  eg2c::ModelWeights weights;
  eg2c::Tensor input;
};

RandomLayer random_layer(std::mt19937& rng, eg2c::LayerKind kind,
                         eg2c::QuantMode mode);

}  // namespace oracle
