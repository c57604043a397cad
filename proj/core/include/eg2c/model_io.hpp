#pragma once

#include <string>
#include <vector>

#include "eg2c/model.hpp"
#include "eg2c/reference_models.hpp"

namespace eg2c {

// Binary model container, little-endian throughout.
//
//   magic "EG2C", version u16, model count u8
//   per model: role u8, layer count u16,
//     per layer: header (kind u8, quant u8, cin u16, cout u16, h u16,
//                w u16, stride u8, shift i8, act u8, outbits u8)
//                followed by raw dense weight bytes (po2 codes packed two
//                per byte, low nibble first; int8 one byte each)
//   then a sparse section: per model, per conv layer:
//     u32 nonzero vectors, u16 indices, packed payload (po2 vectors 12
//     bits padded to 2 bytes, int8 vectors 3 bytes)
//
// The sparse section is derived from the dense weights at save time and
// cross-checked against them on load.
struct ModelFile {
  std::vector<ReferenceModel> models;
};

void save_models(const std::string& path, const ModelFile& file);
ModelFile load_models(const std::string& path);

// Dense serialized byte size of one layer's weights.
size_t dense_weight_bytes(const LayerSpec& layer);

}  // namespace eg2c
