#pragma once

// Co-simulation of victim, sensor, scheduler and striker on the main clock.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glitchsim/accel.hpp"
#include "glitchsim/dataio.hpp"
#include "glitchsim/dspfault.hpp"
#include "glitchsim/pdn.hpp"
#include "glitchsim/sched.hpp"
#include "glitchsim/striker.hpp"
#include "glitchsim/tdc.hpp"

namespace glitchsim {

enum class Placement { Even, Random };

/// Voltage the fault model reads on a struck cycle: the instantaneous
/// resistive drop of that cycle, or the filtered rail voltage the sensor sees.
enum class FaultVoltage { Resistive, Filtered };

const char* to_string(FaultVoltage f);
FaultVoltage parse_fault_voltage(const std::string& s);

const char* to_string(Placement p);
Placement parse_placement(const std::string& s);

struct SimConfig {
  std::uint64_t f_main_hz = 100'000'000;
  ScheduleConfig schedule;
  PdnConfig pdn;
  TdcConfig tdc;
  StrikerConfig striker;
  DetectorConfig detector;
  FaultConfig fault;
  /// Idle cycles simulated before the victim starts, so the detector can arm.
  std::uint64_t lead_in_cycles = 64;
  std::uint64_t seed = 1;
  bool trace_enabled = false;
  Placement placement = Placement::Even;
  FaultVoltage fault_voltage = FaultVoltage::Resistive;

  std::uint64_t f_dsp_hz() const { return 2 * f_main_hz; }
  std::uint64_t f_sram_hz() const { return f_main_hz; }
  void validate() const;
};

struct CycleRecord {
  std::int64_t cycle = 0;  // relative to victim start; negative during lead-in
  double v = 0.0;
  std::uint8_t count = 0;
  std::uint8_t taps = 0;
  int layer = -1;  // schedule window index, -1 when no layer runs
  bool enable = false;

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct SimTrace {
  std::vector<CycleRecord> records;  // lead-in plus inference, when tracing
  std::vector<FaultEvent> faults;
  std::optional<std::int64_t> trigger_cycle;
  std::uint64_t strikes = 0;  // enabled cycles within the inference
  std::vector<std::int64_t> scores;
  int prediction = -1;

  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

class Simulator {
 public:
  Simulator(QuantizedModel model, SimConfig cfg);

  const Accelerator& accelerator() const { return accel_; }
  const SimConfig& config() const { return cfg_; }
  const LayerSchedule& schedule() const { return accel_.schedule(); }
  /// Inference cycles (the window strikes can land in).
  std::uint64_t inference_cycles() const { return accel_.schedule().total_cycles; }
  /// Rows of a full trace: lead-in plus inference.
  std::uint64_t timeline_length() const { return cfg_.lead_in_cycles + inference_cycles(); }

  /// Detector-driven attack replaying `scheme` after the trigger.
  SimTrace run_guided(std::span<const std::uint8_t> image, const AttackScheme& scheme, std::uint64_t run_seed) const;
  SimTrace run_guided(std::span<const std::uint8_t> image, const AttackScheme& scheme) const {
    return run_guided(image, scheme, cfg_.seed);
  }
  /// n distinct strike cycles drawn uniformly over the inference. Throws
  /// ArgumentOverflow when n exceeds inference_cycles().
  SimTrace run_blind(std::span<const std::uint8_t> image, std::uint64_t n_strikes, std::uint64_t run_seed) const;
  SimTrace run_blind(std::span<const std::uint8_t> image, std::uint64_t n_strikes) const {
    return run_blind(image, n_strikes, cfg_.seed);
  }
  /// Strikes on exactly the given victim-relative cycles, no detector.
  SimTrace run_fixed(std::span<const std::uint8_t> image, const std::vector<std::uint64_t>& strike_cycles,
                     std::uint64_t run_seed) const;

 private:
  struct Driver;
  SimTrace run(std::span<const std::uint8_t> image, const Driver& driver, std::uint64_t run_seed) const;

  SimConfig cfg_;
  Accelerator accel_;
  std::vector<double> victim_load_;  // per inference cycle
  std::vector<int> layer_;           // window index per inference cycle
};

/// Free-function forms; each builds a Simulator.
SimTrace run_guided(const QuantizedModel& model, std::span<const std::uint8_t> image, const AttackScheme& scheme,
                    const SimConfig& cfg);
SimTrace run_blind(const QuantizedModel& model, std::span<const std::uint8_t> image, std::uint64_t n_strikes,
                   const SimConfig& cfg);

/// Trigger cycle observed on a fault-free run (the profiling step).
std::optional<std::int64_t> profile_trigger(const Simulator& sim, std::span<const std::uint8_t> image,
                                            std::uint64_t run_seed);

/// Victim-relative strike cycles for n strikes inside a layer window.
/// Even: start + floor((2i + 1) * D / (2n)). Random: uniform without
/// replacement. Throws ArgumentOverflow when n exceeds the window.
std::vector<std::uint64_t> strike_cycles(const LayerWindow& window, std::uint64_t n, Placement placement,
                                         std::uint64_t seed);

/// Scheme whose bits, counted from `trigger_cycle`, land on `cycles`.
AttackScheme scheme_for_cycles(const std::vector<std::uint64_t>& cycles, std::int64_t trigger_cycle,
                               std::uint64_t f_sram_hz);

/// k distinct values from [0, n), sorted (Floyd's algorithm).
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k, Rng& rng);

enum class AttackMode { Guided, Blind };

const char* to_string(AttackMode m);
AttackMode parse_mode(const std::string& s);

struct SweepConfig {
  std::vector<std::string> layers{"conv2"};  // ignored in blind mode
  std::vector<std::uint64_t> grid{0};
  AttackMode mode = AttackMode::Guided;
  std::uint32_t seeds = 5;
  unsigned jobs = 1;
  /// Image used for the profiling run that fixes the trigger offset.
  std::size_t profile_image = 0;

  void validate() const;
};

struct SweepRow {
  std::string layer;  // "blind" in blind mode
  std::uint64_t n_strikes = 0;
  std::uint32_t seed = 0;
  std::uint64_t images = 0;
  std::uint64_t correct = 0;
  std::uint64_t faults = 0;

  double accuracy() const { return images ? static_cast<double>(correct) / static_cast<double>(images) : 0.0; }
};

struct SweepPoint {
  std::string layer;
  std::uint64_t n_strikes = 0;
  double mean_accuracy = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
  double mean_faults = 0.0;
};

/// Accuracy of every (layer, grid point, seed) over the subset. Run seeds
/// depend only on (master seed, seed index, image index), so every grid
/// point sees the same noise. Rows are sorted by (layer, n, seed).
std::vector<SweepRow> sweep_accuracy(const Simulator& sim, const Dataset& subset, const SweepConfig& cfg);

std::vector<SweepPoint> summarize(const std::vector<SweepRow>& rows);

Table trace_table(const SimTrace& trace, const LayerSchedule& schedule);
Table faults_table(const SimTrace& trace, const LayerSchedule& schedule);
Table sweep_table(const std::vector<SweepRow>& rows);
Table summary_table(const std::vector<SweepPoint>& points);

}  // namespace glitchsim
