#include "glitchsim/tdc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "glitchsim/errors.hpp"

namespace glitchsim {

namespace {

void check_taps(const TapPositions& positions) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] > 127) throw Error(ErrorCode::IndexOutOfRange, "tap position " + std::to_string(positions[i]));
    if (i > 0 && positions[i] <= positions[i - 1])
      throw Error(ErrorCode::InvalidArgument, "tap positions must be strictly increasing");
  }
}

}  // namespace

void TdcConfig::validate() const {
  if (l_carry != 128) throw Error(ErrorCode::InvalidArgument, "only a 128-stage carry chain is modeled");
  if (b0 > l_carry) throw Error(ErrorCode::InvalidArgument, "b0 exceeds the chain length");
  if (!(gain > 0)) throw Error(ErrorCode::InvalidArgument, "gain must be positive");
  if (!(bubble_prob >= 0 && bubble_prob <= 1)) throw Error(ErrorCode::InvalidArgument, "bubble_prob must be in [0, 1]");
  if (!(v_nom > 0)) throw Error(ErrorCode::InvalidArgument, "v_nom must be positive");
  check_taps(taps);
}

Tdc128 Tdc128::thermometer(std::uint32_t k) {
  Tdc128 t;
  if (k >= 128) {
    t.words = {~std::uint64_t{0}, ~std::uint64_t{0}};
  } else if (k >= 64) {
    t.words[0] = ~std::uint64_t{0};
    t.words[1] = k == 64 ? 0 : (~std::uint64_t{0} >> (128 - k));
  } else {
    t.words[0] = k == 0 ? 0 : (~std::uint64_t{0} >> (64 - k));
  }
  return t;
}

std::string Tdc128::to_string() const {
  std::string s(128, '0');
  for (std::uint32_t i = 0; i < 128; ++i)
    if (bit(i)) s[i] = '1';
  return s;
}

std::uint32_t ideal_count(double v, const TdcConfig& cfg) {
  const double k = std::round(static_cast<double>(cfg.b0) - cfg.gain * (cfg.v_nom - v));
  return static_cast<std::uint32_t>(std::clamp(k, 0.0, 128.0));
}

Tdc128 sample(double v, const TdcConfig& cfg, Rng& rng) {
  Tdc128 raw = Tdc128::thermometer(ideal_count(v, cfg));
  if (cfg.bubble_prob <= 0) return raw;
  if (cfg.bubble_prob >= 1) {
    raw.words = {~raw.words[0], ~raw.words[1]};
    return raw;
  }
  // Skipping geometric gaps gives the same law as 128 Bernoulli draws.
  std::geometric_distribution<std::uint32_t> gap(cfg.bubble_prob);
  for (std::uint64_t i = gap(rng); i < 128; i += std::uint64_t{gap(rng)} + 1) raw.flip(static_cast<std::uint32_t>(i));
  return raw;
}

std::uint8_t tap(const Tdc128& raw, const TapPositions& positions) {
  check_taps(positions);
  std::uint8_t w = 0;
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (raw.bit(positions[i])) w |= static_cast<std::uint8_t>(1u << i);
  return w;
}

TdcSample measure(double v, const TdcConfig& cfg, Rng& rng, std::int64_t cycle) {
  TdcSample s;
  s.raw = sample(v, cfg, rng);
  s.count = encode(s.raw);
  s.taps = tap(s.raw, cfg.taps);
  s.cycle = cycle;
  return s;
}

}  // namespace glitchsim
