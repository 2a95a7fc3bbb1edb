#include "glitchsim/sched.hpp"

#include <algorithm>
#include <bit>
#include <charconv>

#include "glitchsim/errors.hpp"

namespace glitchsim {

AttackScheme AttackScheme::from_runs(const std::vector<Run>& runs, std::uint64_t f_sram_hz) {
  if (f_sram_hz == 0) throw Error(ErrorCode::InvalidArgument, "f_sram_hz must be positive");
  AttackScheme s;
  s.f_sram_hz_ = f_sram_hz;
  for (const Run& r : runs) {
    if (r.length == 0) continue;
    if (r.length > kMaxSchemeLength || s.length_ + r.length > kMaxSchemeLength)
      throw Error(ErrorCode::LengthOverflow, "scheme longer than " + std::to_string(kMaxSchemeLength) + " cycles");
    if (!s.runs_.empty() && s.runs_.back().bit == r.bit) {
      s.runs_.back().length += r.length;
    } else {
      s.runs_.push_back(r);
      s.starts_.push_back(s.length_);
    }
    s.length_ += r.length;
  }
  if (s.length_ == 0) throw Error(ErrorCode::InvalidArgument, "scheme is empty");
  return s;
}

AttackScheme AttackScheme::from_bits(const std::vector<std::uint8_t>& bits, std::uint64_t f_sram_hz) {
  std::vector<Run> runs;
  for (std::uint8_t b : bits) runs.push_back({b != 0, 1});
  return from_runs(runs, f_sram_hz);
}

AttackScheme AttackScheme::from_strikes(const std::vector<std::uint64_t>& offsets, std::uint64_t length,
                                        std::uint64_t f_sram_hz) {
  std::vector<Run> runs;
  std::uint64_t pos = 0;
  for (std::uint64_t o : offsets) {
    if (o < pos || o >= length) throw Error(ErrorCode::InvalidArgument, "strike offsets must be sorted, distinct and in range");
    runs.push_back({false, o - pos});
    runs.push_back({true, 1});
    pos = o + 1;
  }
  runs.push_back({false, length - pos});
  return from_runs(runs, f_sram_hz);
}

bool AttackScheme::bit(std::uint64_t i) const {
  if (i >= length_) return false;
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), i);
  return runs_[static_cast<std::size_t>(it - starts_.begin()) - 1].bit;
}

std::vector<std::uint8_t> AttackScheme::expand() const {
  std::vector<std::uint8_t> bits;
  bits.reserve(length_);
  for (const Run& r : runs_) bits.insert(bits.end(), r.length, r.bit ? 1 : 0);
  return bits;
}

std::uint64_t AttackScheme::attack_delay() const { return runs_.front().bit ? 0 : runs_.front().length; }

std::vector<Pulse> AttackScheme::pulses() const {
  std::vector<Pulse> p;
  for (std::size_t i = 0; i < runs_.size(); ++i)
    if (runs_[i].bit) p.push_back({starts_[i], runs_[i].length});
  return p;
}

std::size_t AttackScheme::count() const {
  return static_cast<std::size_t>(std::count_if(runs_.begin(), runs_.end(), [](const Run& r) { return r.bit; }));
}

std::uint64_t AttackScheme::ones() const {
  std::uint64_t n = 0;
  for (const Run& r : runs_)
    if (r.bit) n += r.length;
  return n;
}

namespace {

[[noreturn]] void syntax(const std::string& msg) { throw Error(ErrorCode::SyntaxError, "attack scheme: " + msg); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::uint64_t parse_uint(std::string_view s, const char* what) {
  if (s.empty()) syntax(std::string("missing ") + what);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc::result_out_of_range) throw Error(ErrorCode::LengthOverflow, std::string(what) + " out of range");
  if (ec != std::errc() || p != s.data() + s.size()) syntax("bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

AttackScheme parse_scheme(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(trim(text.substr(0, nl)));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != 2) syntax("expected a header line and one run line");

  constexpr std::string_view kHeader = "f_sram_hz=";
  if (lines[0].substr(0, kHeader.size()) != kHeader) syntax("header must start with f_sram_hz=");
  const std::uint64_t f_sram = parse_uint(lines[0].substr(kHeader.size()), "f_sram_hz");
  if (f_sram == 0) syntax("f_sram_hz must be positive");

  std::vector<AttackScheme::Run> runs;
  std::uint64_t total = 0;
  std::string_view body = lines[1];
  while (!body.empty()) {
    const auto sp = body.find_first_of(" \t");
    const std::string_view tok = body.substr(0, sp);
    body = sp == std::string_view::npos ? std::string_view{} : trim(body.substr(sp));
    if (tok.size() < 3 || (tok[0] != '0' && tok[0] != '1') || tok[1] != '*') syntax("bad token '" + std::string(tok) + "'");
    const std::uint64_t len = parse_uint(tok.substr(2), "run length");
    if (len == 0) syntax("zero-length run");
    if (len > kMaxSchemeLength || total + len > kMaxSchemeLength)
      throw Error(ErrorCode::LengthOverflow, "scheme longer than " + std::to_string(kMaxSchemeLength) + " cycles");
    total += len;
    runs.push_back({tok[0] == '1', len});
  }
  if (runs.empty()) syntax("no runs");
  return AttackScheme::from_runs(runs, f_sram);
}

std::string render_scheme(const AttackScheme& scheme) {
  std::string out = "f_sram_hz=" + std::to_string(scheme.f_sram_hz()) + "\n";
  bool first = true;
  for (const auto& r : scheme.runs()) {
    if (!first) out += ' ';
    first = false;
    out += r.bit ? '1' : '0';
    out += '*';
    out += std::to_string(r.length);
  }
  out += '\n';
  return out;
}

AttackScheme make_scheme(std::uint64_t delay, std::uint64_t period, std::uint64_t count, std::uint64_t spacing,
                         std::uint64_t f_sram_hz) {
  if (count >= 1 && period == 0) throw Error(ErrorCode::InvalidArgument, "period must be at least 1 when count > 0");
  // Exact total in 128 bits so that huge arguments cannot wrap.
  const unsigned __int128 total = static_cast<unsigned __int128>(delay) +
                                  static_cast<unsigned __int128>(count) * period +
                                  (count > 0 ? static_cast<unsigned __int128>(count - 1) * spacing : 0);
  if (total > kMaxSchemeLength)
    throw Error(ErrorCode::ArgumentOverflow, "scheme longer than " + std::to_string(kMaxSchemeLength) + " cycles");
  if (total == 0) throw Error(ErrorCode::InvalidArgument, "scheme is empty");
  std::vector<AttackScheme::Run> runs{{false, delay}};
  for (std::uint64_t i = 0; i < count; ++i) {
    runs.push_back({true, period});
    if (i + 1 < count) runs.push_back({false, spacing});
  }
  return AttackScheme::from_runs(runs, f_sram_hz);
}

void DetectorConfig::validate() const {
  if (idle_hw < 0 || idle_hw > 5 || trigger_hw < 0 || trigger_hw > 5)
    throw Error(ErrorCode::InvalidArgument, "Hamming-weight thresholds must be in [0, 5]");
  if (trigger_hw >= idle_hw) throw Error(ErrorCode::InvalidArgument, "trigger_hw must be below idle_hw");
  if (warmup_cycles == 0 || debounce_cycles == 0)
    throw Error(ErrorCode::InvalidArgument, "warmup and debounce must be at least one cycle");
}

const char* to_string(DetectorPhase phase) {
  switch (phase) {
    case DetectorPhase::Idle: return "IDLE";
    case DetectorPhase::Armed: return "ARMED";
    case DetectorPhase::Triggered: return "TRIGGERED";
  }
  return "?";
}

DetectorStep detector_step(const DetectorState& state, std::uint8_t tap_word, std::int64_t cycle,
                           const DetectorConfig& cfg) {
  DetectorStep out{state, false};
  DetectorState& s = out.state;
  const int hw = std::popcount(static_cast<unsigned>(tap_word & 0x1f));
  switch (s.phase) {
    case DetectorPhase::Triggered: break;
    case DetectorPhase::Idle:
      if (hw != cfg.idle_hw) {
        s.run = 0;
        break;
      }
      if (s.run++ == 0) s.run_start = cycle;
      if (s.run >= cfg.warmup_cycles) {
        s.phase = DetectorPhase::Armed;
        s.run = 0;
      }
      break;
    case DetectorPhase::Armed:
      if (hw > cfg.trigger_hw) {
        s.run = 0;
        break;
      }
      if (s.run++ == 0) s.run_start = cycle;
      if (s.run >= cfg.debounce_cycles) {
        s.phase = DetectorPhase::Triggered;
        s.trigger_cycle = s.run_start;
        out.triggered = true;
      }
      break;
  }
  return out;
}

bool controller_step(const AttackScheme& scheme, std::optional<std::int64_t> cycles_since_trigger,
                     std::uint64_t f_main_hz) {
  if (!cycles_since_trigger || *cycles_since_trigger < 0 || f_main_hz == 0) return false;
  const unsigned __int128 idx =
      static_cast<unsigned __int128>(*cycles_since_trigger) * scheme.f_sram_hz() / f_main_hz;
  if (idx >= scheme.length()) return false;
  return scheme.bit(static_cast<std::uint64_t>(idx));
}

}  // namespace glitchsim
