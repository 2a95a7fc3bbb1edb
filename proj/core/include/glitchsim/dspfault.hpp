#pragma once

// DSP-slice timing-fault model: under a strike a slice either misses its
// deadline and re-emits the previous result (duplication) or latches an
// unrelated value (random).

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "glitchsim/accel.hpp"
#include "glitchsim/fxp.hpp"
#include "glitchsim/pdn.hpp"
#include "glitchsim/rng.hpp"
#include "glitchsim/striker.hpp"

namespace glitchsim {

inline constexpr std::uint32_t kDspPipelineDepth = 5;

struct FaultConfig {
  double v_nom = 1.0;
  double v_safe = 0.02;   // droop at which faults begin
  double v_width = 0.10;  // droop range over which probability ramps 0 -> 1
  double rho_dup = 0.5;
  /// When set, each slice draws its own rho_dup uniformly within
  /// rho_dup +/- profile_spread (clamped to [0, 1]).
  bool per_slice_profile = false;
  double profile_spread = 0.25;

  void validate() const;
};

enum class FaultKind { Duplication, Random };

const char* to_string(FaultKind kind);

struct FaultEvent {
  std::int64_t cycle = 0;
  std::uint32_t slice = 0;
  std::uint32_t layer = 0;
  std::uint64_t op_index = 0;
  FaultKind kind = FaultKind::Duplication;
  std::int64_t correct_raw = 0;
  std::int64_t emitted_raw = 0;

  friend bool operator==(const FaultEvent&, const FaultEvent&) = default;
};

/// (a + b) * c with saturation after each stage.
Fx dsp_op(const Fx& a, const Fx& b, const Fx& c);
std::int64_t dsp_op_raw(std::int64_t a, std::int64_t b, std::int64_t c, const QFormat& fmt);

/// clamp(((v_nom - v) - v_safe) / v_width, 0, 1).
double fault_probability(double v, const FaultConfig& cfg);

/// DSP cycle of an op: two DSP cycles per main cycle.
inline std::uint64_t dsp_cycle_of(const DspOpRecord& op) { return op.cycle * 2 + op.phase; }

class DspSlice {
 public:
  struct InFlight {
    std::uint64_t issue_dsp_cycle = 0;
    std::int64_t result_raw = 0;
  };

  struct Outcome {
    std::int64_t emitted_raw = 0;
    std::optional<FaultEvent> event;
  };

  DspSlice(std::uint32_t id, const QFormat& fmt, double rho_dup);

  /// Issues one op. `correct_raw` must equal dsp_op_raw(op); callers that
  /// already hold the product pass it to avoid recomputing. The fault draw
  /// uses rng only while strike_active is set.
  Outcome execute(const DspOpRecord& op, std::int64_t correct_raw, double v, bool strike_active,
                  const FaultConfig& cfg, Rng& rng);
  Outcome execute(const DspOpRecord& op, double v, bool strike_active, const FaultConfig& cfg, Rng& rng);
  /// Forces a specific outcome (nullopt = correct), bypassing the voltage.
  Outcome execute_forced(const DspOpRecord& op, std::optional<FaultKind> kind, Rng& rng);
  /// Fault-free issue, same bookkeeping as execute() with no strike.
  void commit(const DspOpRecord& op, std::int64_t correct_raw) {
    last_correct_ = correct_raw;
    push(dsp_cycle_of(op), correct_raw);
  }

  std::uint32_t id() const { return id_; }
  double rho_dup() const { return rho_dup_; }
  std::int64_t last_correct_raw() const { return last_correct_; }
  /// DSP cycle at which an op issued at `issue_dsp_cycle` becomes visible.
  static std::uint64_t visible_cycle(std::uint64_t issue_dsp_cycle) { return issue_dsp_cycle + kDspPipelineDepth; }
  /// Ops still in the pipeline at the given DSP cycle, oldest first.
  std::vector<InFlight> in_flight(std::uint64_t dsp_cycle) const;
  std::uint64_t issued() const { return issued_; }

 private:
  Outcome resolve(const DspOpRecord& op, std::int64_t correct_raw, std::optional<FaultKind> kind, Rng& rng);
  void push(std::uint64_t dsp_cycle, std::int64_t result) {
    pipe_[head_] = {dsp_cycle, result};
    head_ = head_ + 1 == kDspPipelineDepth ? 0 : head_ + 1;
    ++issued_;
  }

  std::uint32_t id_;
  QFormat fmt_;
  double rho_dup_;
  std::int64_t last_correct_ = 0;
  std::array<InFlight, kDspPipelineDepth> pipe_{};
  std::uint32_t head_ = 0;  // next pipe_ slot to overwrite
  std::uint64_t issued_ = 0;
};

struct CharacterizeConfig {
  std::vector<std::uint64_t> cells{0, 4000, 8000, 12000, 16000, 20000, 24000};
  std::uint64_t trials = 10000;
  std::uint32_t seeds = 5;
  std::uint64_t master_seed = 1;
  unsigned jobs = 1;
  PdnConfig pdn;
  StrikerConfig striker;
  FaultConfig fault;
  QFormat fmt = kQ3_5;

  void validate() const;
};

struct CharacterizeRow {
  std::uint64_t n_cells = 0;
  std::uint64_t trials = 0;  // summed over seeds
  std::uint64_t dup = 0;
  std::uint64_t rand = 0;

  double dup_rate() const { return trials ? static_cast<double>(dup) / static_cast<double>(trials) : 0.0; }
  double rand_rate() const { return trials ? static_cast<double>(rand) / static_cast<double>(trials) : 0.0; }
  double total_rate() const { return dup_rate() + rand_rate(); }
};

/// Single-op experiments: random operands, the striker on for exactly the
/// issue cycle, voltage from one PDN step with no victim load. Rows follow
/// the order of cfg.cells.
std::vector<CharacterizeRow> characterize(const CharacterizeConfig& cfg);

/// Same, for one (cell count, seed) pair.
CharacterizeRow characterize_point(std::uint64_t n_cells, std::uint64_t seed, const CharacterizeConfig& cfg);

}  // namespace glitchsim
