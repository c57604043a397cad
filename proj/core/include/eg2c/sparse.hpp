#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "eg2c/model.hpp"

namespace eg2c {

// Vector-wise sparse weight format. Weights are grouped into 3-element
// vectors: one kernel row for 3x3 convolutions, three consecutive input
// channels of one output channel for point-wise convolutions. Vectors
// whose three weights are all zero are dropped; survivors keep a strictly
// increasing 16-bit index into the dense vector enumeration. FC layers
// are always stored dense and are not covered by this format.
struct WeightVector {
  uint16_t index = 0;
  std::array<uint8_t, 3> w{};  // po2 codes or int8 bytes, like LayerWeights
};

struct SparseLayer {
  std::vector<WeightVector> vectors;
};

struct SparsityStats {
  uint32_t total_vectors = 0;
  uint32_t nonzero_vectors = 0;
  uint64_t dense_bytes = 0;       // dense storage footprint of the layer
  uint64_t payload_bytes = 0;     // packed nonzero vector payload
  uint64_t index_bytes = 0;       // 2 bytes per surviving vector

  double vector_sparsity() const {
    return total_vectors == 0 ? 0.0
                              : 1.0 - double(nonzero_vectors) / total_vectors;
  }
};

// Number of 3-weight vectors a dense layer decomposes into.
// ConvNormal: Cout*Cin*3, ConvDW: Cin*3, ConvPW: Cout*ceil(Cin/3)
// (a trailing partial channel triplet is padded with zero weights).
uint32_t dense_vector_count(const LayerSpec& layer);

// Weights of dense vector `index`, padded with zeros where a PW triplet
// runs past Cin. Throws IndexOutOfRange / UnsupportedKind.
std::array<uint8_t, 3> vector_weights(const LayerSpec& layer,
                                      const LayerWeights& weights,
                                      uint32_t index);

// True when every weight of the vector decodes to zero.
bool vector_is_zero(const LayerSpec& layer, const std::array<uint8_t, 3>& w);

// Drop all-zero vectors; survivors in canonical (strictly increasing
// index) order. Throws UnsupportedKind for FC layers.
SparseLayer encode_sparse(const LayerSpec& layer, const LayerWeights& weights);

// Rebuild the dense layout, zeros where vectors were dropped.
// Throws IndexOutOfRange for an index past the dense vector count.
LayerWeights decode_sparse(const LayerSpec& layer, const SparseLayer& sparse);

SparsityStats sparsity_stats(const LayerSpec& layer, const SparseLayer& sparse);

// Zero out the `fraction` of vectors with the smallest L1 magnitude of
// decoded values (ties: lower index pruned first), never dropping the
// last vector of a layer. The pruned count is round(fraction * total),
// capped at total - 1. FC layers are returned unchanged.
LayerWeights prune_layer(const LayerSpec& layer, const LayerWeights& weights,
                         double fraction);

// Uniform random vector pruning at the same cap; used by property tests.
LayerWeights prune_layer_random(const LayerSpec& layer,
                                const LayerWeights& weights, double fraction,
                                std::mt19937& rng);

// prune_layer over every conv layer of a model.
ModelWeights prune_model(const ModelSpec& model, const ModelWeights& weights,
                         double fraction);

// Achieved vector sparsity over the conv layers of a model.
double model_vector_sparsity(const ModelSpec& model, const ModelWeights& weights);

}  // namespace eg2c
