#include "glitchsim/striker.hpp"

#include <algorithm>
#include <cmath>

#include "glitchsim/errors.hpp"

namespace glitchsim {

void StrikerConfig::validate() const {
  if (!(i_cell >= 0) || !std::isfinite(i_cell)) throw Error(ErrorCode::InvalidArgument, "i_cell must be non-negative");
}

double striker_load(bool enable, const StrikerConfig& cfg) { return enable ? cfg.full_load() : 0.0; }

Striker::Striker(StrikerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double Striker::step(bool enable) {
  if (!enable) {
    run_ = 0;
    return 0.0;
  }
  ++run_;
  const double frac = std::min(1.0, static_cast<double>(run_) / static_cast<double>(cfg_.ramp_cycles + 1));
  return cfg_.full_load() * frac;
}

}  // namespace glitchsim
