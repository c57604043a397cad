#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "eg2c/errors.hpp"

namespace eg2c {

// Dense activation tensor, channel-major (c, h, w), int8 samples.
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<int8_t> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), data(size_t(c_) * h_ * w_, 0) {}

  size_t size() const { return data.size(); }

  int8_t at(int ci, int hi, int wi) const { return data[idx(ci, hi, wi)]; }
  int8_t& at(int ci, int hi, int wi) { return data[idx(ci, hi, wi)]; }

  size_t idx(int ci, int hi, int wi) const {
    return (size_t(ci) * h + hi) * w + wi;
  }

  bool operator==(const Tensor&) const = default;
};

// Layer output. Values are stored widened to int16 because a layer may
// requantize to either 8-bit or 16-bit outputs; `outbits` records which.
struct ActTensor {
  int c = 0;
  int h = 0;
  int w = 0;
  int outbits = 8;
  std::vector<int16_t> data;

  ActTensor() = default;
  ActTensor(int c_, int h_, int w_, int outbits_)
      : c(c_), h(h_), w(w_), outbits(outbits_), data(size_t(c_) * h_ * w_, 0) {}

  size_t size() const { return data.size(); }

  int16_t at(int ci, int hi, int wi) const {
    return data[(size_t(ci) * h + hi) * w + wi];
  }

  // Narrow an 8-bit activation tensor back to int8 storage.
  Tensor to_int8() const;

  bool operator==(const ActTensor&) const = default;
};

}  // namespace eg2c
