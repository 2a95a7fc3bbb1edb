#pragma once

// Attack scheduling: the signal-RAM scheme, the start detector and the
// controller that replays the scheme once the detector fires.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace glitchsim {

inline constexpr std::uint64_t kMaxSchemeLength = 100'000'000;
inline constexpr std::uint64_t kDefaultSramHz = 100'000'000;

struct Pulse {
  std::uint64_t start = 0;
  std::uint64_t length = 0;

  friend bool operator==(const Pulse&, const Pulse&) = default;
};

/// Per-cycle striker enable bits, stored as canonical runs (adjacent runs
/// alternate in value, no empty runs).
class AttackScheme {
 public:
  struct Run {
    bool bit = false;
    std::uint64_t length = 0;

    friend bool operator==(const Run&, const Run&) = default;
  };

  /// Merges adjacent equal runs and drops empty ones. Throws
  /// LengthOverflow past kMaxSchemeLength and InvalidArgument if the result
  /// is empty or f_sram_hz is zero.
  static AttackScheme from_runs(const std::vector<Run>& runs, std::uint64_t f_sram_hz = kDefaultSramHz);
  static AttackScheme from_bits(const std::vector<std::uint8_t>& bits, std::uint64_t f_sram_hz = kDefaultSramHz);
  /// Ones at the given sorted, distinct offsets; `length` bits in total.
  static AttackScheme from_strikes(const std::vector<std::uint64_t>& offsets, std::uint64_t length,
                                   std::uint64_t f_sram_hz = kDefaultSramHz);

  const std::vector<Run>& runs() const { return runs_; }
  std::uint64_t f_sram_hz() const { return f_sram_hz_; }
  std::uint64_t length() const { return length_; }
  /// Bit at index i; false past the end.
  bool bit(std::uint64_t i) const;
  std::vector<std::uint8_t> expand() const;

  /// Length of the leading run of zeros.
  std::uint64_t attack_delay() const;
  std::vector<Pulse> pulses() const;
  std::size_t count() const;
  std::uint64_t ones() const;

  friend bool operator==(const AttackScheme&, const AttackScheme&) = default;

 private:
  std::vector<Run> runs_;
  std::vector<std::uint64_t> starts_;  // start index of each run
  std::uint64_t length_ = 0;
  std::uint64_t f_sram_hz_ = kDefaultSramHz;
};

/// Grammar:
///   f_sram_hz=<int>
///   <bit>*<len> <bit>*<len> ...
/// Throws SyntaxError or LengthOverflow.
AttackScheme parse_scheme(std::string_view text);
/// Canonical text, newline-terminated.
std::string render_scheme(const AttackScheme& scheme);

/// `delay` zeros, then `count` repetitions of (`period` ones, `spacing`
/// zeros) without the final spacing. Throws ArgumentOverflow when the
/// expansion exceeds kMaxSchemeLength.
AttackScheme make_scheme(std::uint64_t delay, std::uint64_t period, std::uint64_t count, std::uint64_t spacing,
                         std::uint64_t f_sram_hz = kDefaultSramHz);

struct DetectorConfig {
  int idle_hw = 4;
  int trigger_hw = 3;
  std::uint32_t warmup_cycles = 16;
  std::uint32_t debounce_cycles = 3;

  void validate() const;
};

enum class DetectorPhase { Idle, Armed, Triggered };

const char* to_string(DetectorPhase phase);

struct DetectorState {
  DetectorPhase phase = DetectorPhase::Idle;
  std::uint32_t run = 0;             // length of the current qualifying run
  std::int64_t run_start = 0;        // cycle of the first sample in that run
  std::optional<std::int64_t> trigger_cycle;

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

struct DetectorStep {
  DetectorState state;
  bool triggered = false;  // true only on the step that enters Triggered
};

/// Idle -> Armed after warmup_cycles consecutive samples of weight idle_hw;
/// Armed -> Triggered after debounce_cycles consecutive samples of weight
/// <= trigger_hw, with trigger_cycle set to the first of them. Triggered is
/// absorbing.
DetectorStep detector_step(const DetectorState& state, std::uint8_t tap_word, std::int64_t cycle,
                           const DetectorConfig& cfg);

/// Enable bit `cycles_since_trigger` main cycles after the trigger; false
/// before the trigger (nullopt) and past the end of the scheme.
bool controller_step(const AttackScheme& scheme, std::optional<std::int64_t> cycles_since_trigger,
                     std::uint64_t f_main_hz);

}  // namespace glitchsim
