#pragma once

#include <cstdint>

namespace eg2c {

// Weight quantization of a layer. Activations are always int8 and
// accumulation is always int32 regardless of the weight mode.
enum class QuantMode : uint8_t {
  Po2_4bit = 0,  // 4-bit power-of-two codes, multiply is a shift
  Int8 = 1,      // plain 8-bit integer weights
};

// 4-bit power-of-two weight code.
//
// Layout: bit3 = sign, bits 2..0 = exponent e, value = +/- 2^-e with
// e in 0..6. Code 0b1111 is the unique zero. That leaves 14 nonzero
// levels plus zero; code 0b0111 (e = 7) is never produced by the encoder
// but decodes to +2^-7 so that every non-0b1111 code is nonzero.
namespace po2 {

constexpr uint8_t kZeroCode = 0xF;
constexpr int kMaxExp = 6;

constexpr bool is_zero(uint8_t code) { return (code & 0xF) == kZeroCode; }
constexpr bool sign_bit(uint8_t code) { return (code & 0x8) != 0; }
constexpr int exponent(uint8_t code) { return code & 0x7; }

constexpr uint8_t make(bool negative, int e) {
  return uint8_t((negative ? 0x8 : 0x0) | (e & 0x7));
}

// Real value represented by a code at a given layer scale.
double decode(uint8_t code, double scale);

// Nearest representable code for `value` at `scale`: exact zeros map to
// the zero code, everything else to the nearest nonzero level in log
// space, saturating at e = 0 and e = 6.
uint8_t encode(double value, double scale);

// Shift-only multiply: act * (+/-2^-e) evaluated as an arithmetic right
// shift of the activation, truncating toward negative infinity, then
// negated when the sign bit is set. The zero code contributes 0.
inline int32_t mac(int32_t act, uint8_t code) {
  if (is_zero(code)) return 0;
  int32_t m = act >> exponent(code);
  return sign_bit(code) ? -m : m;
}

}  // namespace po2

// Saturating clamp of an int32 accumulator to a signed `bits`-wide range.
int32_t clamp_to_bits(int32_t v, int bits);

}  // namespace eg2c
