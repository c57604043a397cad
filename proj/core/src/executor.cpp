#include "eg2c/executor.hpp"

#include <algorithm>
#include <cstdlib>

#include "eg2c/errors.hpp"
#include "eg2c/quant.hpp"

namespace eg2c {
namespace {

inline int32_t weight_term(QuantMode mode, uint8_t w, int32_t act) {
  if (mode == QuantMode::Int8) return act * int32_t(int8_t(w));
  return po2::mac(act, w);
}

inline bool weight_is_zero(QuantMode mode, uint8_t w) {
  return mode == QuantMode::Int8 ? int8_t(w) == 0 : po2::is_zero(w);
}

// Valid output-column range [lo, hi) for kernel column kw: the columns
// whose tap wo*stride + kw - pad_left lands inside the input row.
inline void col_range(int wout, int win, int stride, int kw, int padl,
                      int& lo, int& hi) {
  int first = kw - padl;  // input column at wo = 0
  lo = first < 0 ? (-first + stride - 1) / stride : 0;
  int past = win - first;  // wo*stride must be < past
  hi = past <= 0 ? 0 : std::min(wout, (past + stride - 1) / stride);
}

void accumulate_conv3x3(const LayerSpec& l, const LayerWeights& weights,
                        const Tensor& in, std::vector<int32_t>& acc) {
  const int hout = l.hout(), wout = l.wout();
  const int padt = l.pad_top(), padl = l.pad_left();
  const bool dw = l.kind == LayerKind::ConvDW;
  for (int co = 0; co < l.cout; ++co) {
    int32_t* plane = acc.data() + size_t(co) * hout * wout;
    const int ci_begin = dw ? co : 0;
    const int ci_end = dw ? co + 1 : l.cin;
    for (int ci = ci_begin; ci < ci_end; ++ci) {
      for (int kh = 0; kh < 3; ++kh) {
        for (int kw = 0; kw < 3; ++kw) {
          const size_t widx = dw ? (size_t(co) * 3 + kh) * 3 + kw
                                 : ((size_t(co) * l.cin + ci) * 3 + kh) * 3 + kw;
          const uint8_t w = weights.w[widx];
          if (weight_is_zero(l.quant, w)) continue;
          int lo, hi;
          col_range(wout, l.w, l.stride, kw, padl, lo, hi);
          for (int ho = 0; ho < hout; ++ho) {
            const int y = ho * l.stride + kh - padt;
            if (y < 0 || y >= l.h) continue;
            const int8_t* row = in.data.data() + in.idx(ci, y, 0);
            int32_t* out_row = plane + size_t(ho) * wout;
            const int base = lo * l.stride + kw - padl;
            if (l.quant == QuantMode::Int8) {
              const int32_t wv = int8_t(w);
              for (int wo = lo; wo < hi; ++wo)
                out_row[wo] += wv * int32_t(row[base + (wo - lo) * l.stride]);
            } else {
              const int e = po2::exponent(w);
              const int32_t s = po2::sign_bit(w) ? -1 : 1;
              for (int wo = lo; wo < hi; ++wo)
                out_row[wo] += s * (int32_t(row[base + (wo - lo) * l.stride]) >> e);
            }
          }
        }
      }
    }
  }
}

void accumulate_pw(const LayerSpec& l, const LayerWeights& weights,
                   const Tensor& in, std::vector<int32_t>& acc) {
  const int hout = l.hout(), wout = l.wout();
  for (int co = 0; co < l.cout; ++co) {
    int32_t* plane = acc.data() + size_t(co) * hout * wout;
    for (int ci = 0; ci < l.cin; ++ci) {
      const uint8_t w = weights.w[size_t(co) * l.cin + ci];
      if (weight_is_zero(l.quant, w)) continue;
      for (int ho = 0; ho < hout; ++ho) {
        const int8_t* row = in.data.data() + in.idx(ci, ho * l.stride, 0);
        int32_t* out_row = plane + size_t(ho) * wout;
        if (l.quant == QuantMode::Int8) {
          const int32_t wv = int8_t(w);
          for (int wo = 0; wo < wout; ++wo)
            out_row[wo] += wv * int32_t(row[size_t(wo) * l.stride]);
        } else {
          const int e = po2::exponent(w);
          const int32_t s = po2::sign_bit(w) ? -1 : 1;
          for (int wo = 0; wo < wout; ++wo)
            out_row[wo] += s * (int32_t(row[size_t(wo) * l.stride]) >> e);
        }
      }
    }
  }
}

void accumulate_fc(const LayerSpec& l, const LayerWeights& weights,
                   const Tensor& in, std::vector<int32_t>& acc) {
  for (int co = 0; co < l.cout; ++co) {
    int32_t sum = 0;
    const uint8_t* wrow = weights.w.data() + size_t(co) * l.cin;
    for (int ci = 0; ci < l.cin; ++ci)
      sum += weight_term(l.quant, wrow[ci], in.data[ci]);
    acc[co] = sum;
  }
}

}  // namespace

ActTensor run_layer(const LayerSpec& layer, const LayerWeights& weights,
                    const Tensor& input, int32_t* max_abs_acc) {
  const bool fc = layer.kind == LayerKind::FC;
  const size_t flat = size_t(input.c) * input.h * input.w;
  if (fc) {
    if (flat != size_t(layer.cin))
      throw ShapeMismatch("FC input size mismatch");
  } else if (input.c != layer.cin || input.h != layer.h || input.w != layer.w) {
    throw ShapeMismatch("layer input shape mismatch");
  }
  if (weights.w.size() != layer.weight_count())
    throw ShapeMismatch("weight count mismatch");

  const int hout = fc ? 1 : layer.hout();
  const int wout = fc ? 1 : layer.wout();
  std::vector<int32_t> acc(size_t(layer.cout) * hout * wout, 0);

  switch (layer.kind) {
    case LayerKind::ConvNormal:
    case LayerKind::ConvDW:
      accumulate_conv3x3(layer, weights, input, acc);
      break;
    case LayerKind::ConvPW:
      accumulate_pw(layer, weights, input, acc);
      break;
    case LayerKind::FC:
      accumulate_fc(layer, weights, input, acc);
      break;
  }

  int32_t peak = 0;
  ActTensor out(layer.cout, hout, wout, layer.outbits);
  for (size_t i = 0; i < acc.size(); ++i) {
    peak = std::max(peak, std::abs(acc[i]));
    int32_t v = acc[i] >> layer.requant_shift;
    if (layer.act == Activation::ReLU && v < 0) v = 0;
    out.data[i] = int16_t(clamp_to_bits(v, layer.outbits));
  }
  if (max_abs_acc) *max_abs_acc = peak;
  return out;
}

ActTensor dense_forward(const ModelSpec& model, const ModelWeights& weights,
                        const Tensor& input, ForwardTrace* trace) {
  model.validate();
  if (weights.size() != model.layers.size())
    throw ShapeMismatch("weight set does not match layer count");

  Tensor act = input;
  ActTensor out;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    int32_t peak = 0;
    const LayerSpec& l = model.layers[i];
    Tensor in = l.kind == LayerKind::FC
                    ? Tensor{}  // flattened view built below
                    : act;
    if (l.kind == LayerKind::FC) {
      in.c = int(act.size());
      in.h = 1;
      in.w = 1;
      in.data = act.data;
    }
    out = run_layer(l, weights[i], in, &peak);
    if (trace) {
      trace->max_abs_acc.push_back(peak);
      trace->outputs.push_back(out);
    }
    if (i + 1 < model.layers.size()) act = out.to_int8();
  }
  return out;
}

}  // namespace eg2c
