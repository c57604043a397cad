#include "eg2c/model.hpp"

#include <string>

#include "eg2c/errors.hpp"

namespace eg2c {

const char* fault_cause_name(FaultCause cause) {
  switch (cause) {
    case FaultCause::DecodeError: return "decode-error";
    case FaultCause::MissingHalt: return "missing-halt";
    case FaultCause::BadProgram: return "bad-program";
    case FaultCause::CapacityOverflow: return "capacity-overflow";
    case FaultCause::BufferOverflow: return "buffer-overflow";
  }
  return "unknown";
}

Fault::Fault(uint32_t pc_, FaultCause cause_, const std::string& detail)
    : Error("fault at pc " + std::to_string(pc_) + " (" +
            fault_cause_name(cause_) + "): " + detail),
      pc(pc_),
      cause(cause_) {}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::ConvNormal: return "conv3x3";
    case LayerKind::ConvDW: return "dw3x3";
    case LayerKind::ConvPW: return "pw1x1";
    case LayerKind::FC: return "fc";
  }
  return "unknown";
}

const char* model_role_name(ModelRole role) {
  switch (role) {
    case ModelRole::Detector: return "detector";
    case ModelRole::CoarseConverter: return "coarse";
    case ModelRole::PreciseConverter: return "precise";
  }
  return "unknown";
}

Tensor ActTensor::to_int8() const {
  if (outbits != 8) throw ShapeMismatch("cannot narrow a 16-bit output tensor to int8");
  Tensor t(c, h, w);
  for (size_t i = 0; i < data.size(); ++i) t.data[i] = int8_t(data[i]);
  return t;
}

int LayerSpec::hout() const { return (h + stride - 1) / stride; }
int LayerSpec::wout() const { return (w + stride - 1) / stride; }

int LayerSpec::pad_top() const {
  int total = (hout() - 1) * stride + kernel() - h;
  return total > 0 ? total / 2 : 0;
}

int LayerSpec::pad_left() const {
  int total = (wout() - 1) * stride + kernel() - w;
  return total > 0 ? total / 2 : 0;
}

size_t LayerSpec::weight_count() const {
  switch (kind) {
    case LayerKind::ConvNormal: return size_t(cout) * cin * 9;
    case LayerKind::ConvDW: return size_t(cin) * 9;
    case LayerKind::ConvPW: return size_t(cout) * cin;
    case LayerKind::FC: return size_t(cout) * cin;
  }
  return 0;
}

uint64_t layer_macs(const LayerSpec& layer) {
  const uint64_t spatial = uint64_t(layer.hout()) * layer.wout();
  switch (layer.kind) {
    case LayerKind::ConvNormal: return uint64_t(layer.cin) * layer.cout * 9 * spatial;
    case LayerKind::ConvDW: return uint64_t(layer.cin) * 9 * spatial;
    case LayerKind::ConvPW: return uint64_t(layer.cin) * layer.cout * spatial;
    case LayerKind::FC: return uint64_t(layer.cin) * layer.cout;
  }
  return 0;
}

uint64_t model_macs(const ModelSpec& model) {
  uint64_t total = 0;
  for (const auto& l : model.layers) total += layer_macs(l);
  return total;
}

void ModelSpec::validate() const {
  if (layers.empty()) throw ShapeMismatch("model has no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string at = "layer " + std::to_string(i) + ": ";
    if (l.cin <= 0 || l.cout <= 0 || l.h <= 0 || l.w <= 0)
      throw ShapeMismatch(at + "non-positive dimension");
    if (l.stride <= 0) throw ShapeMismatch(at + "non-positive stride");
    if (l.requant_shift < 0 || l.requant_shift > 31)
      throw ShapeMismatch(at + "requant shift out of [0, 31]");
    if (l.outbits != 8 && l.outbits != 16)
      throw ShapeMismatch(at + "outbits must be 8 or 16");
    if (l.outbits == 16 && i + 1 != layers.size())
      throw ShapeMismatch(at + "16-bit outputs are only allowed on the final layer");
    if (l.kind == LayerKind::ConvDW && l.cout != l.cin)
      throw ShapeMismatch(at + "depth-wise layer needs Cout == Cin");
    if (l.kind == LayerKind::FC && (l.h != 1 || l.w != 1))
      throw ShapeMismatch(at + "FC layer uses H = W = 1 over the flattened input");
    if (i > 0) {
      const LayerSpec& p = layers[i - 1];
      const size_t flat = size_t(p.cout) * p.hout() * p.wout();
      if (l.kind == LayerKind::FC) {
        if (size_t(l.cin) != flat)
          throw ShapeMismatch(at + "FC input size does not match previous output");
      } else if (l.cin != p.cout || l.h != p.hout() || l.w != p.wout()) {
        throw ShapeMismatch(at + "input shape does not chain from previous layer");
      }
    }
  }
}

}  // namespace eg2c
