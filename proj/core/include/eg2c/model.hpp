#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eg2c/quant.hpp"
#include "eg2c/tensor.hpp"

namespace eg2c {

enum class LayerKind : uint8_t {
  ConvNormal = 0,  // 3x3 convolution
  ConvDW = 1,      // 3x3 depth-wise convolution, Cout == Cin
  ConvPW = 2,      // 1x1 point-wise convolution
  FC = 3,          // fully connected over the flattened input
};

enum class Activation : uint8_t {
  ReLU = 0,
  Identity = 1,
};

enum class ModelRole : uint8_t {
  Detector = 0,
  CoarseConverter = 1,
  PreciseConverter = 2,
};

const char* layer_kind_name(LayerKind kind);
const char* model_role_name(ModelRole role);

// One layer of a model. H and W are the layer's input spatial dims; FC
// layers use H = W = 1 and Cin equal to the flattened input size.
struct LayerSpec {
  LayerKind kind = LayerKind::ConvNormal;
  QuantMode quant = QuantMode::Int8;
  int cin = 0;
  int cout = 0;
  int h = 0;
  int w = 0;
  int stride = 1;
  int requant_shift = 0;       // arithmetic right shift after accumulation
  Activation act = Activation::ReLU;
  int outbits = 8;             // 8 or 16

  int kernel() const { return kind == LayerKind::ConvNormal || kind == LayerKind::ConvDW ? 3 : 1; }
  int hout() const;
  int wout() const;
  int pad_top() const;   // zero padding rows above (same padding)
  int pad_left() const;
  size_t weight_count() const;       // dense weight elements
  size_t input_bytes() const { return size_t(cin) * h * w; }
  size_t output_bytes() const { return size_t(cout) * hout() * wout() * (outbits == 16 ? 2 : 1); }

  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  ModelRole role = ModelRole::Detector;
  std::vector<LayerSpec> layers;

  // Throws ShapeMismatch / UnsupportedKind on an inconsistent stack:
  // layer-to-layer shape chaining, DW Cout == Cin, 16-bit outputs only on
  // the final layer, positive dims, shift in [0, 31].
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

// Dense weights for one layer in canonical flat order:
//   ConvNormal (co, ci, kh, kw); ConvDW (c, kh, kw); ConvPW / FC (co, ci).
// Po2 layers store one 4-bit code per element (unpacked, one byte each);
// Int8 layers store the two's-complement weight byte.
struct LayerWeights {
  std::vector<uint8_t> w;
};

using ModelWeights = std::vector<LayerWeights>;

// Multiply count of one layer / one model (each MAC is one operation;
// zero padding positions count like any other multiply).
uint64_t layer_macs(const LayerSpec& layer);
uint64_t model_macs(const ModelSpec& model);

}  // namespace eg2c
