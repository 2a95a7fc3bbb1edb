#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace glitchsim {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a path of
/// integer labels (stream id, image index, seed index, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform double in [0, 1) using the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Stream labels used with derive_seed so that each stochastic source in a
/// simulation owns its own engine.
enum class Stream : std::uint64_t {
  PdnNoise = 1,
  TdcBubble = 2,
  Fault = 3,
  BlindPlacement = 4,
  GuidedPlacement = 5,
  SliceProfile = 6,
  Operands = 7,
};

inline std::uint64_t stream_seed(std::uint64_t run_seed, Stream s) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(s)});
}

}  // namespace glitchsim
