#include "eg2c/reference_models.hpp"

#include <bit>
#include <random>

#include "eg2c/executor.hpp"
#include "eg2c/quant.hpp"

namespace eg2c {
namespace {

uint32_t below(std::mt19937& g, uint32_t n) { return g() % n; }

// nonzero int8 in [-127, 127]; conv layers avoid zero weights so the
// dense models carry no accidental all-zero vectors
uint8_t nonzero_int8(std::mt19937& g) {
  const uint32_t k = below(g, 254);
  return uint8_t(int8_t(k < 127 ? int(k) - 127 : int(k) - 126));
}

// any of the 14 nonzero po2 levels
uint8_t nonzero_po2(std::mt19937& g) {
  const uint32_t k = below(g, 14);
  return po2::make(k >= 7, int(k % 7));
}

LayerSpec conv3x3(int cin, int cout, int h, int w, QuantMode q, int stride = 1) {
  LayerSpec l;
  l.kind = LayerKind::ConvNormal;
  l.quant = q;
  l.cin = cin;
  l.cout = cout;
  l.h = h;
  l.w = w;
  l.stride = stride;
  return l;
}

LayerSpec dw3x3(int c, int h, int w, QuantMode q, int stride = 1) {
  LayerSpec l = conv3x3(c, c, h, w, q, stride);
  l.kind = LayerKind::ConvDW;
  return l;
}

LayerSpec pw1x1(int cin, int cout, int h, int w, QuantMode q) {
  LayerSpec l = conv3x3(cin, cout, h, w, q);
  l.kind = LayerKind::ConvPW;
  return l;
}

LayerSpec fc(int cin, int cout) {
  LayerSpec l;
  l.kind = LayerKind::FC;
  l.quant = QuantMode::Int8;
  l.cin = cin;
  l.cout = cout;
  l.h = 1;
  l.w = 1;
  return l;
}

// Detector: depth-wise front end that decimates the frame 4x in both
// dims, a hidden FC stage, and a positive-weight scalar head, so the
// score grows with beat amplitude. ~4.0K MACs.
ModelSpec detector_spec() {
  ModelSpec m;
  m.role = ModelRole::Detector;
  m.layers.push_back(dw3x3(1, kFrameH, kFrameW, QuantMode::Int8, 4));
  m.layers.push_back(fc(8 * 16, 22));
  LayerSpec head = fc(22, 1);
  head.act = Activation::Identity;
  head.outbits = 16;
  m.layers.push_back(head);
  return m;
}

// Coarse converter: po2 4-bit weights, 12 conv layers. ~2.67M MACs.
// The tail tapers to 5 channels before the final pointwise so the
// bottleneck's staged input rows stay within the activation buffer.
ModelSpec coarse_spec() {
  constexpr QuantMode q = QuantMode::Po2_4bit;
  ModelSpec m;
  m.role = ModelRole::CoarseConverter;
  m.layers.push_back(conv3x3(1, 6, kFrameH, kFrameW, q));
  for (int b = 0; b < 2; ++b) {
    m.layers.push_back(dw3x3(6, kFrameH, kFrameW, q));
    m.layers.push_back(pw1x1(6, 6, kFrameH, kFrameW, q));
    m.layers.push_back(conv3x3(6, 6, kFrameH, kFrameW, q));
  }
  m.layers.push_back(dw3x3(6, kFrameH, kFrameW, q));
  m.layers.push_back(pw1x1(6, 6, kFrameH, kFrameW, q));
  m.layers.push_back(conv3x3(6, 5, kFrameH, kFrameW, q));
  m.layers.push_back(dw3x3(5, kFrameH, kFrameW, q));
  LayerSpec out = pw1x1(5, 3, kFrameH, kFrameW, q);
  out.act = Activation::Identity;
  m.layers.push_back(out);
  return m;
}

// Precise converter: int8, 21 conv layers. ~5.78M MACs.
ModelSpec precise_spec() {
  constexpr QuantMode q = QuantMode::Int8;
  ModelSpec m;
  m.role = ModelRole::PreciseConverter;
  m.layers.push_back(conv3x3(1, 6, kFrameH, kFrameW, q));
  for (int b = 0; b < 6; ++b) {
    m.layers.push_back(dw3x3(6, kFrameH, kFrameW, q));
    m.layers.push_back(pw1x1(6, 6, kFrameH, kFrameW, q));
    m.layers.push_back(conv3x3(6, 6, kFrameH, kFrameW, q));
  }
  m.layers.push_back(conv3x3(6, 5, kFrameH, kFrameW, q));
  LayerSpec out = pw1x1(5, 3, kFrameH, kFrameW, q);
  out.act = Activation::Identity;
  m.layers.push_back(out);
  return m;
}

ModelWeights draw_weights(const ModelSpec& model, uint32_t seed) {
  std::mt19937 g(seed);
  ModelWeights weights;
  for (const LayerSpec& layer : model.layers) {
    LayerWeights lw;
    lw.w.resize(layer.weight_count());
    const bool head = layer.kind == LayerKind::FC && layer.cout == 1;
    for (uint8_t& b : lw.w) {
      if (layer.quant == QuantMode::Po2_4bit)
        b = nonzero_po2(g);
      else if (head)
        b = uint8_t(int8_t(1 + below(g, 127)));
      else if (layer.kind == LayerKind::FC)
        b = uint8_t(int8_t(int(below(g, 255)) - 127));
      else
        b = nonzero_int8(g);
    }
    weights.push_back(std::move(lw));
  }
  return weights;
}

// Requantization shifts, layer by layer on the calibration frame: pick
// the smallest shift that brings the observed peak accumulator into the
// output range, then feed the shifted output to the next layer.
void calibrate_shifts(ModelSpec& model, const ModelWeights& weights) {
  Tensor x = calibration_frame();
  for (size_t i = 0; i < model.layers.size(); ++i) {
    LayerSpec& layer = model.layers[i];
    layer.requant_shift = 0;
    int32_t peak = 0;
    run_layer(layer, weights[i], x, &peak);
    const int headroom = layer.outbits - 2;
    if (peak > 0)
      layer.requant_shift =
          std::max(0, int(std::bit_width(uint32_t(peak))) - 1 - headroom);
    if (i + 1 < model.layers.size())
      x = run_layer(layer, weights[i], x).to_int8();
  }
}

ReferenceModel build(ModelSpec spec, uint32_t seed) {
  ReferenceModel m;
  m.weights = draw_weights(spec, seed);
  calibrate_shifts(spec, m.weights);
  spec.validate();
  m.spec = std::move(spec);
  return m;
}

}  // namespace

Tensor calibration_frame() {
  // full-range noise frame: drives every accumulator hard so calibrated
  // shifts leave headroom for real beats
  Tensor t(kFrameC, kFrameH, kFrameW);
  std::mt19937 g(0x0eC6);
  for (int8_t& v : t.data) v = int8_t(int(below(g, 255)) - 127);
  return t;
}

ReferenceSuite build_reference_models() {
  static const ReferenceSuite suite = [] {
    ReferenceSuite s;
    s.detector = build(detector_spec(), 1001);
    s.coarse = build(coarse_spec(), 1002);
    s.precise = build(precise_spec(), 1003);
    return s;
  }();
  return suite;
}

}  // namespace eg2c
