#pragma once

// Carry-chain delay sensor. A lower supply slows the chain, so fewer stages
// latch a 1 before the sampling edge.

#include <array>
#include <bit>
#include <cstdint>
#include <string>

#include "glitchsim/rng.hpp"

namespace glitchsim {

using TapPositions = std::array<std::uint32_t, 5>;

struct TdcConfig {
  double f_dr_hz = 200e6;
  std::uint32_t l_lut = 4;
  std::uint32_t l_carry = 128;
  double v_nom = 1.0;
  std::uint32_t b0 = 90;      // count at v_nom; stands in for the calibrated phase
  double gain = 300.0;        // bins per volt of droop
  double bubble_prob = 0.002;
  TapPositions taps{40, 55, 70, 85, 96};

  void validate() const;
};

/// 128-bit raw readout; bit i is stage i of the carry chain.
struct Tdc128 {
  std::array<std::uint64_t, 2> words{};

  bool bit(std::uint32_t i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set(std::uint32_t i) { words[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void flip(std::uint32_t i) { words[i >> 6] ^= std::uint64_t{1} << (i & 63); }
  /// k ones followed by 128 - k zeros.
  static Tdc128 thermometer(std::uint32_t k);
  /// Bit string, stage 0 first.
  std::string to_string() const;

  friend bool operator==(const Tdc128&, const Tdc128&) = default;
};

struct TdcSample {
  Tdc128 raw;
  std::uint8_t count = 0;
  std::uint8_t taps = 0;
  std::int64_t cycle = 0;
};

/// clamp(round(b0 - gain * (v_nom - v)), 0, 128).
std::uint32_t ideal_count(double v, const TdcConfig& cfg);

/// Thermometer code for v with each bit independently flipped with
/// probability bubble_prob.
Tdc128 sample(double v, const TdcConfig& cfg, Rng& rng);

inline std::uint8_t encode(const Tdc128& raw) {
  return static_cast<std::uint8_t>(std::popcount(raw.words[0]) + std::popcount(raw.words[1]));
}

/// Bit i of the result is raw[positions[i]]. Throws IndexOutOfRange for a
/// position past 127 and InvalidArgument if positions are not increasing.
std::uint8_t tap(const Tdc128& raw, const TapPositions& positions);

TdcSample measure(double v, const TdcConfig& cfg, Rng& rng, std::int64_t cycle);

inline int hamming_weight(std::uint8_t taps) { return std::popcount(taps); }

}  // namespace glitchsim
