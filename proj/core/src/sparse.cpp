#include "eg2c/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eg2c/errors.hpp"
#include "eg2c/quant.hpp"

namespace eg2c {
namespace {

bool is_conv(const LayerSpec& layer) { return layer.kind != LayerKind::FC; }

// Offset of a vector's first weight in the dense flat layout, and how
// many of its three slots are real weights (a trailing PW channel
// triplet may be padded).
void vector_span(const LayerSpec& layer, uint32_t index, size_t& off, int& len) {
  switch (layer.kind) {
    case LayerKind::ConvNormal:
    case LayerKind::ConvDW:
      off = size_t(index) * 3;
      len = 3;
      return;
    case LayerKind::ConvPW: {
      const uint32_t triplets = (uint32_t(layer.cin) + 2) / 3;
      const uint32_t co = index / triplets;
      const uint32_t t = index % triplets;
      off = size_t(co) * layer.cin + size_t(t) * 3;
      len = std::min(3, layer.cin - int(t) * 3);
      return;
    }
    case LayerKind::FC:
      throw UnsupportedKind("FC layers are stored dense");
  }
  throw UnsupportedKind("bad layer kind");
}

uint8_t zero_weight(QuantMode mode) {
  return mode == QuantMode::Po2_4bit ? po2::kZeroCode : 0;
}

double weight_magnitude(QuantMode mode, uint8_t w) {
  if (mode == QuantMode::Int8) return std::abs(int8_t(w));
  return std::fabs(po2::decode(w, 1.0));
}

uint32_t prune_count(uint32_t total, double fraction) {
  if (total == 0) return 0;
  auto k = uint32_t(std::llround(fraction * total));
  return std::min(k, total - 1);  // always keep at least one vector
}

LayerWeights zero_vectors_at(const LayerSpec& layer, const LayerWeights& weights,
                             const std::vector<uint32_t>& victims) {
  LayerWeights out = weights;
  for (uint32_t v : victims) {
    size_t off;
    int len;
    vector_span(layer, v, off, len);
    for (int i = 0; i < len; ++i) out.w[off + i] = zero_weight(layer.quant);
  }
  return out;
}

}  // namespace

uint32_t dense_vector_count(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::ConvNormal: return uint32_t(layer.cout) * layer.cin * 3;
    case LayerKind::ConvDW: return uint32_t(layer.cin) * 3;
    case LayerKind::ConvPW:
      return uint32_t(layer.cout) * ((uint32_t(layer.cin) + 2) / 3);
    case LayerKind::FC:
      throw UnsupportedKind("FC layers are stored dense");
  }
  throw UnsupportedKind("bad layer kind");
}

std::array<uint8_t, 3> vector_weights(const LayerSpec& layer,
                                      const LayerWeights& weights,
                                      uint32_t index) {
  if (index >= dense_vector_count(layer))
    throw IndexOutOfRange("vector index past dense vector count");
  size_t off;
  int len;
  vector_span(layer, index, off, len);
  std::array<uint8_t, 3> w{zero_weight(layer.quant), zero_weight(layer.quant),
                           zero_weight(layer.quant)};
  for (int i = 0; i < len; ++i) w[i] = weights.w[off + i];
  return w;
}

bool vector_is_zero(const LayerSpec& layer, const std::array<uint8_t, 3>& w) {
  for (uint8_t x : w) {
    if (layer.quant == QuantMode::Po2_4bit ? !po2::is_zero(x) : int8_t(x) != 0)
      return false;
  }
  return true;
}

SparseLayer encode_sparse(const LayerSpec& layer, const LayerWeights& weights) {
  if (!is_conv(layer)) throw UnsupportedKind("FC layers are stored dense");
  if (weights.w.size() != layer.weight_count())
    throw ShapeMismatch("weight count mismatch");
  const uint32_t total = dense_vector_count(layer);
  if (total > 0xFFFF) throw CapacityExceeded("vector index would not fit 16 bits");
  SparseLayer out;
  for (uint32_t v = 0; v < total; ++v) {
    auto w = vector_weights(layer, weights, v);
    if (vector_is_zero(layer, w)) continue;
    out.vectors.push_back({uint16_t(v), w});
  }
  return out;
}

LayerWeights decode_sparse(const LayerSpec& layer, const SparseLayer& sparse) {
  if (!is_conv(layer)) throw UnsupportedKind("FC layers are stored dense");
  const uint32_t total = dense_vector_count(layer);
  LayerWeights out;
  out.w.assign(layer.weight_count(), zero_weight(layer.quant));
  uint32_t prev = 0;
  bool first = true;
  for (const WeightVector& v : sparse.vectors) {
    if (v.index >= total) throw IndexOutOfRange("vector index past dense vector count");
    if (!first && v.index <= prev)
      throw IndexOutOfRange("vector indices must be strictly increasing");
    first = false;
    prev = v.index;
    size_t off;
    int len;
    vector_span(layer, v.index, off, len);
    for (int i = 0; i < len; ++i) out.w[off + i] = v.w[i];
  }
  return out;
}

SparsityStats sparsity_stats(const LayerSpec& layer, const SparseLayer& sparse) {
  SparsityStats s;
  s.total_vectors = dense_vector_count(layer);
  s.nonzero_vectors = uint32_t(sparse.vectors.size());
  const size_t per_vector = layer.quant == QuantMode::Po2_4bit ? 2 : 3;
  s.payload_bytes = uint64_t(s.nonzero_vectors) * per_vector;
  s.index_bytes = uint64_t(s.nonzero_vectors) * 2;
  s.dense_bytes = layer.quant == QuantMode::Po2_4bit
                      ? (layer.weight_count() + 1) / 2
                      : layer.weight_count();
  return s;
}

LayerWeights prune_layer(const LayerSpec& layer, const LayerWeights& weights,
                         double fraction) {
  if (!is_conv(layer) || fraction <= 0.0) return weights;
  const uint32_t total = dense_vector_count(layer);
  const uint32_t k = prune_count(total, fraction);
  if (k == 0) return weights;

  std::vector<uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> mag(total, 0.0);
  for (uint32_t v = 0; v < total; ++v) {
    auto w = vector_weights(layer, weights, v);
    for (uint8_t x : w) mag[v] += weight_magnitude(layer.quant, x);
  }
  // Smallest L1 first; equal magnitudes fall to the lower index.
  std::stable_sort(order.begin(), order.end(),
                   [&](uint32_t a, uint32_t b) { return mag[a] < mag[b]; });
  order.resize(k);
  return zero_vectors_at(layer, weights, order);
}

LayerWeights prune_layer_random(const LayerSpec& layer,
                                const LayerWeights& weights, double fraction,
                                std::mt19937& rng) {
  if (!is_conv(layer) || fraction <= 0.0) return weights;
  const uint32_t total = dense_vector_count(layer);
  const uint32_t k = prune_count(total, fraction);
  if (k == 0) return weights;
  std::vector<uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (uint32_t i = total - 1; i > 0; --i) {
    std::swap(order[i], order[rng() % (i + 1)]);
  }
  order.resize(k);
  return zero_vectors_at(layer, weights, order);
}

ModelWeights prune_model(const ModelSpec& model, const ModelWeights& weights,
                         double fraction) {
  ModelWeights out;
  out.reserve(weights.size());
  for (size_t i = 0; i < model.layers.size(); ++i)
    out.push_back(prune_layer(model.layers[i], weights[i], fraction));
  return out;
}

double model_vector_sparsity(const ModelSpec& model, const ModelWeights& weights) {
  uint64_t total = 0, nonzero = 0;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (!is_conv(l)) continue;
    total += dense_vector_count(l);
    nonzero += encode_sparse(l, weights[i]).vectors.size();
  }
  return total == 0 ? 0.0 : 1.0 - double(nonzero) / double(total);
}

}  // namespace eg2c
