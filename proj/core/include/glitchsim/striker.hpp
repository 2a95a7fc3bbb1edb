#pragma once

#include <cstdint>

namespace glitchsim {

struct StrikerConfig {
  std::uint64_t n_cells = 8000;
  double i_cell = 1.0;  // load units per 1,000 cells
  std::uint32_t ramp_cycles = 0;

  void validate() const;
  double full_load() const { return static_cast<double>(n_cells) * i_cell / 1000.0; }
};

/// Steady load of the array: full_load() when enabled, zero otherwise.
double striker_load(bool enable, const StrikerConfig& cfg);

/// Tracks how long the array has been enabled so that a non-zero ramp can
/// be applied. With ramp_cycles = 0 this is just striker_load().
class Striker {
 public:
  explicit Striker(StrikerConfig cfg);

  /// Load drawn during this cycle.
  double step(bool enable);
  void reset() { run_ = 0; }
  const StrikerConfig& config() const { return cfg_; }

 private:
  StrikerConfig cfg_;
  std::uint64_t run_ = 0;
};

}  // namespace glitchsim
