#pragma once

// Shared power-distribution-network model. The supply seen by every tenant is
// a first-order low-pass of the resistive target voltage plus white noise.

#include <cstdint>

#include "glitchsim/rng.hpp"

namespace glitchsim {

struct PdnConfig {
  double v_nom = 1.0;
  double r_eff = 0.005;  // volts per load unit
  double tau_cycles = 3.0;
  double noise_sigma = 0.002;

  void validate() const;
  /// Per-cycle filter coefficient 1 - exp(-1/tau).
  double alpha() const;
  /// Upper bound of the filtered voltage.
  double v_max() const { return v_nom + 3.0 * noise_sigma; }
  /// Resistive (unfiltered, noiseless) voltage under a total load.
  double resistive(double total_load) const { return v_nom - r_eff * total_load; }
};

struct VoltageState {
  double v = 1.0;        // filtered, noisy rail voltage (what the TDC senses)
  double v_local = 1.0;  // instantaneous resistive voltage of the current cycle

  static VoltageState nominal(const PdnConfig& cfg) { return {cfg.v_nom, cfg.v_nom}; }
};

/// Smallest voltage the model will report; keeps v strictly positive.
inline constexpr double kMinVoltage = 1e-6;

/// Advances one main cycle. Loads must be non-negative (InvalidArgument).
/// Draws one normal variate from rng unless noise_sigma is zero.
VoltageState step(const VoltageState& state, double attacker_load, double victim_load, const PdnConfig& cfg, Rng& rng);

/// r_eff such that `cells` striker cells drop the rail by `drop` volts at
/// steady state, with `i_cell` load units per 1,000 cells.
double calibrate(double cells, double drop, double i_cell = 1.0);

}  // namespace glitchsim
