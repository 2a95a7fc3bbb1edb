#include "glitchsim/pdn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "glitchsim/errors.hpp"

namespace glitchsim {

void PdnConfig::validate() const {
  if (!(v_nom > 0)) throw Error(ErrorCode::InvalidArgument, "v_nom must be positive");
  if (!(r_eff >= 0)) throw Error(ErrorCode::InvalidArgument, "r_eff must be non-negative");
  if (!(tau_cycles >= 1)) throw Error(ErrorCode::InvalidArgument, "tau_cycles must be at least 1");
  if (!(noise_sigma >= 0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be non-negative");
}

double PdnConfig::alpha() const { return -std::expm1(-1.0 / tau_cycles); }

VoltageState step(const VoltageState& state, double attacker_load, double victim_load, const PdnConfig& cfg, Rng& rng) {
  if (!(attacker_load >= 0) || !(victim_load >= 0)) throw Error(ErrorCode::InvalidArgument, "loads must be non-negative");
  const double target = cfg.resistive(attacker_load + victim_load);
  double v = state.v + (target - state.v) * cfg.alpha();
  if (cfg.noise_sigma > 0) v += std::normal_distribution<double>(0.0, cfg.noise_sigma)(rng);
  return {std::clamp(v, kMinVoltage, cfg.v_max()), std::max(target, kMinVoltage)};
}

double calibrate(double cells, double drop, double i_cell) {
  if (!(cells > 0) || !(drop > 0) || !(i_cell > 0))
    throw Error(ErrorCode::InvalidArgument, "calibration arguments must be positive");
  return drop / (cells * i_cell / 1000.0);
}

}  // namespace glitchsim
