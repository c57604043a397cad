#include "staging.hpp"

#include <algorithm>

#include "eg2c/errors.hpp"

namespace eg2c::detail {

std::vector<uint8_t> pack_dense(const LayerSpec& layer,
                                const LayerWeights& weights) {
  if (layer.quant == QuantMode::Int8) return weights.w;
  std::vector<uint8_t> out((weights.w.size() + 1) / 2, 0);
  for (size_t i = 0; i < weights.w.size(); ++i) {
    const uint8_t code = weights.w[i] & 0xF;
    out[i / 2] |= i % 2 ? uint8_t(code << 4) : code;
  }
  return out;
}

std::vector<uint8_t> pack_sparse_payload(const LayerSpec& layer,
                                         const SparseLayer& sparse) {
  std::vector<uint8_t> out;
  if (layer.quant == QuantMode::Int8) {
    out.reserve(sparse.vectors.size() * 3);
    for (const WeightVector& v : sparse.vectors)
      out.insert(out.end(), v.w.begin(), v.w.end());
  } else {
    out.reserve(sparse.vectors.size() * 2);
    for (const WeightVector& v : sparse.vectors) {
      out.push_back(uint8_t((v.w[0] & 0xF) | (v.w[1] & 0xF) << 4));
      out.push_back(uint8_t(v.w[2] & 0xF));
    }
  }
  return out;
}

std::vector<uint8_t> pack_indices(const SparseLayer& sparse) {
  std::vector<uint8_t> out;
  out.reserve(sparse.vectors.size() * 2);
  for (const WeightVector& v : sparse.vectors) {
    out.push_back(uint8_t(v.index));
    out.push_back(uint8_t(v.index >> 8));
  }
  return out;
}

LayerWeights unpack_dense(const LayerSpec& layer,
                          const std::vector<uint8_t>& bytes) {
  const size_t n = layer.weight_count();
  if (bytes.size() != dense_payload_bytes(layer))
    throw ShapeMismatch("dense payload size");
  LayerWeights w;
  if (layer.quant == QuantMode::Int8) {
    w.w = bytes;
  } else {
    w.w.resize(n);
    for (size_t i = 0; i < n; ++i)
      w.w[i] = i % 2 ? bytes[i / 2] >> 4 : bytes[i / 2] & 0xF;
  }
  return w;
}

SparseLayer unpack_sparse(const LayerSpec& layer,
                          const std::vector<uint8_t>& payload,
                          const std::vector<uint8_t>& indices) {
  const size_t count = indices.size() / 2;
  const size_t per = layer.quant == QuantMode::Int8 ? 3 : 2;
  if (payload.size() != count * per)
    throw ShapeMismatch("sparse payload size");
  SparseLayer s;
  s.vectors.resize(count);
  for (size_t i = 0; i < count; ++i) {
    WeightVector& v = s.vectors[i];
    v.index = uint16_t(indices[2 * i] | indices[2 * i + 1] << 8);
    if (layer.quant == QuantMode::Int8) {
      v.w = {payload[3 * i], payload[3 * i + 1], payload[3 * i + 2]};
    } else {
      const uint8_t b0 = payload[2 * i], b1 = payload[2 * i + 1];
      v.w = {uint8_t(b0 & 0xF), uint8_t(b0 >> 4), uint8_t(b1 & 0xF)};
    }
  }
  return s;
}

void append_item_rows(const LayerSpec& layer, const WorkItem& it,
                      std::vector<StagedRow>& set) {
  auto add = [&set](int channel, int row) {
    for (const StagedRow& r : set)
      if (r.channel == channel && r.row == row) return;
    set.push_back({uint16_t(channel), uint16_t(row)});
  };
  const int base = it.out_row * layer.stride - layer.pad_top();
  switch (layer.kind) {
    case LayerKind::ConvNormal: {
      const int ci = int(it.vector_index / 3) % layer.cin;
      const int y = base + int(it.vector_index % 3);
      if (y >= 0 && y < layer.h) add(ci, y);
      break;
    }
    case LayerKind::ConvDW: {
      const int y = base + int(it.vector_index % 3);
      if (y >= 0 && y < layer.h) add(int(it.vector_index / 3), y);
      break;
    }
    case LayerKind::ConvPW: {
      const uint32_t triplets = (uint32_t(layer.cin) + 2) / 3;
      const int t = int(it.vector_index % triplets);
      const int y = it.out_row * layer.stride;
      for (int c = t * 3; c < std::min(t * 3 + 3, layer.cin); ++c)
        if (y < layer.h) add(c, y);
      break;
    }
    case LayerKind::FC:
      break;  // handled by wave_staging_bytes
  }
}

void wave_staged_rows(const LayerSpec& layer, const LaneSchedule& sched,
                      const Wave& wave, std::vector<StagedRow>& out) {
  out.clear();
  for (uint32_t k = 0; k < wave.item_count; ++k)
    append_item_rows(layer, sched.items[wave.first_item + k], out);
}

uint64_t wave_staging_bytes(const LayerSpec& layer, const LaneSchedule& sched,
                            size_t wave_index, std::vector<StagedRow>& scratch) {
  if (layer.kind == LayerKind::FC)
    return wave_index == 0 ? uint64_t(layer.cin) : 0;
  wave_staged_rows(layer, sched, sched.waves[wave_index], scratch);
  return scratch.size() * uint64_t(layer.w);
}

}  // namespace eg2c::detail
