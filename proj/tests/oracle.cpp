#include "oracle.hpp"

#include <cmath>
#include <vector>

using namespace eg2c;

namespace oracle {
namespace {

// Floor division by 2^e, spelled out rather than written as a shift so
// the rounding rule is independent of the engine's implementation.
int64_t floor_div_pow2(int64_t v, int e) {
  return int64_t(std::floor(double(v) / std::exp2(e)));
}

int64_t clamp_signed(int64_t v, int bits) {
  const int64_t hi = (int64_t(1) << (bits - 1)) - 1;
  const int64_t lo = -(int64_t(1) << (bits - 1));
  return v < lo ? lo : v > hi ? hi : v;
}

struct Geometry {
  int hout, wout, pad_top, pad_left;
};

// Same-padding geometry: ceil(dim / stride) outputs, total padding split
// with the smaller half on the leading edge.
Geometry geometry(const LayerSpec& l) {
  const int k = l.kind == LayerKind::ConvPW ? 1 : 3;
  Geometry g;
  g.hout = (l.h + l.stride - 1) / l.stride;
  g.wout = (l.w + l.stride - 1) / l.stride;
  const int pad_h = (g.hout - 1) * l.stride + k - l.h;
  const int pad_w = (g.wout - 1) * l.stride + k - l.w;
  g.pad_top = pad_h > 0 ? pad_h / 2 : 0;
  g.pad_left = pad_w > 0 ? pad_w / 2 : 0;
  return g;
}

int64_t tap(const Tensor& in, int ci, int y, int x) {
  if (y < 0 || y >= in.h || x < 0 || x >= in.w) return 0;  // zero padding
  return in.at(ci, y, x);
}

}  // namespace

int64_t mac_once(QuantMode mode, uint8_t raw, int64_t act) {
  if (mode == QuantMode::Int8) return act * int64_t(int8_t(raw));
  if ((raw & 0xF) == 0xF) return 0;
  const int64_t shifted = floor_div_pow2(act, raw & 0x7);
  return (raw & 0x8) ? -shifted : shifted;
}

ActTensor forward_layer(const LayerSpec& layer, const LayerWeights& weights,
                        const Tensor& input, Counters* counters) {
  const Geometry g =
      layer.kind == LayerKind::FC ? Geometry{1, 1, 0, 0} : geometry(layer);
  ActTensor out(layer.cout, g.hout, g.wout, layer.outbits);

  std::vector<int64_t> acc(out.size(), 0);
  uint64_t macs = 0;

  auto emit = [&](size_t slot, int64_t term) {
    acc[slot] += term;
    ++macs;
  };

  for (int co = 0; co < layer.cout; ++co) {
    for (int oy = 0; oy < g.hout; ++oy) {
      for (int ox = 0; ox < g.wout; ++ox) {
        const size_t slot = (size_t(co) * g.hout + oy) * g.wout + ox;
        switch (layer.kind) {
          case LayerKind::ConvNormal:
            for (int ci = 0; ci < layer.cin; ++ci)
              for (int kh = 0; kh < 3; ++kh)
                for (int kw = 0; kw < 3; ++kw) {
                  const uint8_t w =
                      weights.w[((size_t(co) * layer.cin + ci) * 3 + kh) * 3 + kw];
                  emit(slot, mac_once(layer.quant, w,
                                      tap(input, ci,
                                          oy * layer.stride + kh - g.pad_top,
                                          ox * layer.stride + kw - g.pad_left)));
                }
            break;
          case LayerKind::ConvDW:
            for (int kh = 0; kh < 3; ++kh)
              for (int kw = 0; kw < 3; ++kw) {
                const uint8_t w = weights.w[(size_t(co) * 3 + kh) * 3 + kw];
                emit(slot, mac_once(layer.quant, w,
                                    tap(input, co,
                                        oy * layer.stride + kh - g.pad_top,
                                        ox * layer.stride + kw - g.pad_left)));
              }
            break;
          case LayerKind::ConvPW:
            for (int ci = 0; ci < layer.cin; ++ci) {
              const uint8_t w = weights.w[size_t(co) * layer.cin + ci];
              emit(slot, mac_once(layer.quant, w,
                                  tap(input, ci, oy * layer.stride,
                                      ox * layer.stride)));
            }
            break;
          case LayerKind::FC:
            for (int ci = 0; ci < layer.cin; ++ci) {
              const uint8_t w = weights.w[size_t(co) * layer.cin + ci];
              emit(slot, mac_once(layer.quant, w, input.data[ci]));
            }
            break;
        }
      }
    }
  }

  for (size_t i = 0; i < acc.size(); ++i) {
    int64_t v = floor_div_pow2(acc[i], layer.requant_shift);
    if (layer.act == Activation::ReLU && v < 0) v = 0;
    out.data[i] = int16_t(clamp_signed(v, layer.outbits));
  }
  if (counters) counters->macs += macs;
  return out;
}

ActTensor forward_model(const ModelSpec& model, const ModelWeights& weights,
                        const Tensor& input, Counters* counters) {
  Tensor act = input;
  ActTensor out;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (l.kind == LayerKind::FC) {
      Tensor flat;
      flat.c = int(act.size());
      flat.h = 1;
      flat.w = 1;
      flat.data = act.data;
      out = forward_layer(l, weights[i], flat, counters);
    } else {
      out = forward_layer(l, weights[i], act, counters);
    }
    if (i + 1 < model.layers.size()) act = out.to_int8();
  }
  return out;
}

RandomLayer random_layer(std::mt19937& rng, LayerKind kind, QuantMode mode) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  LayerSpec l;
  l.kind = kind;
  l.quant = mode;
  switch (kind) {
    case LayerKind::ConvNormal:
      l.cin = pick(1, 4);
      l.cout = pick(1, 6);
      l.h = pick(4, 12);
      l.w = pick(4, 16);
      l.stride = pick(1, 2);
      break;
    case LayerKind::ConvDW: {
      l.cin = l.cout = pick(1, 6);
      l.h = pick(4, 12);
      l.w = pick(4, 16);
      const int s[3] = {1, 2, 4};
      l.stride = s[pick(0, 2)];
      break;
    }
    case LayerKind::ConvPW:
      l.cin = pick(1, 10);
      l.cout = pick(1, 8);
      l.h = pick(2, 10);
      l.w = pick(4, 16);
      l.stride = 1;
      break;
    case LayerKind::FC:
      l.cin = pick(4, 96);
      l.cout = pick(1, 24);
      l.h = l.w = 1;
      break;
  }
  l.requant_shift = pick(0, 6);
  l.act = pick(0, 1) ? Activation::Identity : Activation::ReLU;
  l.outbits = pick(0, 3) == 0 ? 16 : 8;

  LayerWeights w;
  w.w.resize(l.weight_count());
  for (uint8_t& b : w.w) {
    if (mode == QuantMode::Int8) {
      b = uint8_t(pick(-128, 127));
    } else {
      // All 4-bit codes except e=7, which the encoder never produces;
      // 0xF (zero) stays in the pool so zero weights occur naturally.
      const int code = pick(0, 14);
      b = uint8_t(code == 7 ? 0xF : code);
    }
  }

  RandomLayer r;
  r.model.role = ModelRole::CoarseConverter;  // plain HALT epilogue
  r.model.layers = {l};
  r.weights = {w};
  r.input =
      Tensor(l.kind == LayerKind::FC ? l.cin : l.cin,
             l.kind == LayerKind::FC ? 1 : l.h, l.kind == LayerKind::FC ? 1 : l.w);
  for (int8_t& v : r.input.data) v = int8_t(pick(-128, 127));
  return r;
}

}  // namespace oracle
