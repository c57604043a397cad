#include "eg2c/quant.hpp"

#include <cmath>

namespace eg2c {
namespace po2 {

double decode(uint8_t code, double scale) {
  code &= 0xF;
  if (is_zero(code)) return 0.0;
  double mag = scale * std::ldexp(1.0, -exponent(code));
  return sign_bit(code) ? -mag : mag;
}

uint8_t encode(double value, double scale) {
  if (value == 0.0) return kZeroCode;
  bool neg = value < 0.0;
  double mag = std::fabs(value) / scale;
  // Nearest level in log space; representable magnitudes are 2^0..2^-6.
  double target = -std::log2(mag);
  int e = int(std::lround(target));
  if (e < 0) e = 0;
  if (e > kMaxExp) e = kMaxExp;
  return make(neg, e);
}

}  // namespace po2

int32_t clamp_to_bits(int32_t v, int bits) {
  const int32_t hi = (int32_t(1) << (bits - 1)) - 1;
  const int32_t lo = -hi - 1;
  if (v > hi) return hi;
  if (v < lo) return lo;
  return v;
}

}  // namespace eg2c
