#include "eg2c/model_io.hpp"

#include <cstdint>
#include <fstream>

#include "eg2c/errors.hpp"
#include "eg2c/sparse.hpp"
#include "staging.hpp"

namespace eg2c {
namespace {

constexpr uint16_t kVersion = 1;

struct Writer {
  std::ofstream f;

  explicit Writer(const std::string& path) : f(path, std::ios::binary) {
    if (!f) throw IoError("cannot write " + path);
  }
  void u8(uint8_t v) { f.put(char(v)); }
  void u16(uint16_t v) {
    u8(uint8_t(v));
    u8(uint8_t(v >> 8));
  }
  void u32(uint32_t v) {
    u16(uint16_t(v));
    u16(uint16_t(v >> 16));
  }
  void bytes(const std::vector<uint8_t>& b) {
    f.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  }
};

struct Reader {
  std::ifstream f;
  std::string path;

  explicit Reader(const std::string& p) : f(p, std::ios::binary), path(p) {
    if (!f) throw IoError("cannot read " + p);
  }
  uint8_t u8() {
    const int c = f.get();
    if (c == EOF) throw IoError("truncated model file: " + path);
    return uint8_t(c);
  }
  uint16_t u16() {
    const uint16_t lo = u8();
    return uint16_t(lo | uint16_t(u8()) << 8);
  }
  uint32_t u32() {
    const uint32_t lo = u16();
    return lo | uint32_t(u16()) << 16;
  }
  std::vector<uint8_t> bytes(size_t n) {
    std::vector<uint8_t> b(n);
    f.read(reinterpret_cast<char*>(b.data()), std::streamsize(n));
    if (size_t(f.gcount()) != n)
      throw IoError("truncated model file: " + path);
    return b;
  }
};

void write_layer_header(Writer& w, const LayerSpec& l) {
  w.u8(uint8_t(l.kind));
  w.u8(uint8_t(l.quant));
  w.u16(uint16_t(l.cin));
  w.u16(uint16_t(l.cout));
  w.u16(uint16_t(l.h));
  w.u16(uint16_t(l.w));
  w.u8(uint8_t(l.stride));
  w.u8(uint8_t(int8_t(l.requant_shift)));
  w.u8(uint8_t(l.act));
  w.u8(uint8_t(l.outbits));
}

LayerSpec read_layer_header(Reader& r) {
  LayerSpec l;
  const uint8_t kind = r.u8();
  if (kind > 3) throw IoError("bad layer kind in " + r.path);
  l.kind = LayerKind(kind);
  const uint8_t quant = r.u8();
  if (quant > 1) throw IoError("bad quant mode in " + r.path);
  l.quant = QuantMode(quant);
  l.cin = r.u16();
  l.cout = r.u16();
  l.h = r.u16();
  l.w = r.u16();
  l.stride = r.u8();
  l.requant_shift = int8_t(r.u8());
  const uint8_t act = r.u8();
  if (act > 1) throw IoError("bad activation in " + r.path);
  l.act = Activation(act);
  l.outbits = r.u8();
  return l;
}

}  // namespace

size_t dense_weight_bytes(const LayerSpec& layer) {
  return detail::dense_payload_bytes(layer);
}

void save_models(const std::string& path, const ModelFile& file) {
  if (file.models.size() > 255) throw RangeError("too many models");
  Writer w(path);
  w.f.write("EG2C", 4);
  w.u16(kVersion);
  w.u8(uint8_t(file.models.size()));
  for (const ReferenceModel& m : file.models) {
    m.spec.validate();
    if (m.weights.size() != m.spec.layers.size())
      throw ShapeMismatch("weights do not cover the model");
    w.u8(uint8_t(m.spec.role));
    w.u16(uint16_t(m.spec.layers.size()));
    for (size_t i = 0; i < m.spec.layers.size(); ++i) {
      write_layer_header(w, m.spec.layers[i]);
      if (m.weights[i].w.size() != m.spec.layers[i].weight_count())
        throw ShapeMismatch("weight count mismatch");
      w.bytes(detail::pack_dense(m.spec.layers[i], m.weights[i]));
    }
  }
  // sparse section, derived from the dense weights
  for (const ReferenceModel& m : file.models) {
    for (size_t i = 0; i < m.spec.layers.size(); ++i) {
      const LayerSpec& l = m.spec.layers[i];
      if (l.kind == LayerKind::FC) continue;
      const SparseLayer s = encode_sparse(l, m.weights[i]);
      w.u32(uint32_t(s.vectors.size()));
      w.bytes(detail::pack_indices(s));
      w.bytes(detail::pack_sparse_payload(l, s));
    }
  }
  if (!w.f) throw IoError("write failed: " + path);
}

ModelFile load_models(const std::string& path) {
  Reader r(path);
  const std::vector<uint8_t> magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "EG2C")
    throw IoError("not a model file: " + path);
  if (r.u16() != kVersion) throw IoError("unsupported model file version");
  const uint8_t count = r.u8();
  ModelFile file;
  for (int mi = 0; mi < count; ++mi) {
    ReferenceModel m;
    const uint8_t role = r.u8();
    if (role > 2) throw IoError("bad model role in " + path);
    m.spec.role = ModelRole(role);
    const uint16_t layers = r.u16();
    for (int li = 0; li < layers; ++li) {
      const LayerSpec l = read_layer_header(r);
      m.spec.layers.push_back(l);
      m.weights.push_back(
          detail::unpack_dense(l, r.bytes(detail::dense_payload_bytes(l))));
    }
    m.spec.validate();
    file.models.push_back(std::move(m));
  }
  for (const ReferenceModel& m : file.models) {
    for (size_t i = 0; i < m.spec.layers.size(); ++i) {
      const LayerSpec& l = m.spec.layers[i];
      if (l.kind == LayerKind::FC) continue;
      const uint32_t nv = r.u32();
      const std::vector<uint8_t> idx = r.bytes(size_t(nv) * 2);
      const size_t per = l.quant == QuantMode::Int8 ? 3 : 2;
      const std::vector<uint8_t> payload = r.bytes(size_t(nv) * per);
      const SparseLayer stored = detail::unpack_sparse(l, payload, idx);
      const SparseLayer derived = encode_sparse(l, m.weights[i]);
      if (stored.vectors.size() != derived.vectors.size())
        throw IoError("sparse section disagrees with dense weights: " + path);
      for (size_t v = 0; v < stored.vectors.size(); ++v)
        if (stored.vectors[v].index != derived.vectors[v].index ||
            stored.vectors[v].w != derived.vectors[v].w)
          throw IoError("sparse section disagrees with dense weights: " + path);
    }
  }
  return file;
}

}  // namespace eg2c
