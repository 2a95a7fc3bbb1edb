#include "glitchsim/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>
#include <unordered_set>

#include "glitchsim/errors.hpp"

namespace glitchsim {

const char* to_string(Placement p) { return p == Placement::Even ? "even" : "random"; }

Placement parse_placement(const std::string& s) {
  if (s == "even") return Placement::Even;
  if (s == "random") return Placement::Random;
  throw Error(ErrorCode::InvalidArgument, "placement must be 'even' or 'random', got '" + s + "'");
}

const char* to_string(FaultVoltage f) { return f == FaultVoltage::Resistive ? "resistive" : "filtered"; }

FaultVoltage parse_fault_voltage(const std::string& s) {
  if (s == "resistive") return FaultVoltage::Resistive;
  if (s == "filtered") return FaultVoltage::Filtered;
  throw Error(ErrorCode::InvalidArgument, "fault voltage must be 'resistive' or 'filtered', got '" + s + "'");
}

const char* to_string(AttackMode m) { return m == AttackMode::Guided ? "guided" : "blind"; }

AttackMode parse_mode(const std::string& s) {
  if (s == "guided") return AttackMode::Guided;
  if (s == "blind") return AttackMode::Blind;
  throw Error(ErrorCode::InvalidArgument, "mode must be 'guided' or 'blind', got '" + s + "'");
}

void SimConfig::validate() const {
  if (f_main_hz == 0) throw Error(ErrorCode::InvalidArgument, "f_main_hz must be positive");
  schedule.validate();
  pdn.validate();
  tdc.validate();
  striker.validate();
  detector.validate();
  fault.validate();
}

namespace {

SimConfig synced(SimConfig cfg) {
  cfg.tdc.v_nom = cfg.pdn.v_nom;
  cfg.fault.v_nom = cfg.pdn.v_nom;
  cfg.validate();
  return cfg;
}

}  // namespace

Simulator::Simulator(QuantizedModel model, SimConfig cfg)
    : cfg_(synced(cfg)), accel_(std::move(model), cfg_.schedule) {
  const LayerSchedule& sched = accel_.schedule();
  victim_load_.resize(sched.total_cycles);
  layer_.resize(sched.total_cycles);
  for (std::uint64_t t = 0; t < sched.total_cycles; ++t) {
    victim_load_[t] = victim_load(sched, cfg_.schedule, t);
    layer_[t] = sched.window_at(t);
  }
}

struct Simulator::Driver {
  const AttackScheme* scheme = nullptr;               // guided
  const std::vector<std::uint64_t>* fixed = nullptr;  // sorted victim cycles
};

namespace {

// Marks the cycles after `fired` at which controller_step would enable the
// striker, walking the scheme's pulses instead of testing every cycle.
void mark_scheme(const AttackScheme& scheme, std::int64_t trigger, std::int64_t fired, std::uint64_t f_main,
                 std::int64_t first_cycle, std::vector<std::uint8_t>& enable) {
  using u128 = unsigned __int128;
  const std::uint64_t fs = scheme.f_sram_hz();
  // Bit i plays on offsets o with floor(o * fs / f_main) == i, i.e.
  // o in [ceil(i * f_main / fs), ceil((i + 1) * f_main / fs)).
  auto first_offset = [&](std::uint64_t i) { return static_cast<std::int64_t>((u128{i} * f_main + fs - 1) / fs); };
  const std::int64_t end = first_cycle + static_cast<std::int64_t>(enable.size());
  for (const Pulse& p : scheme.pulses()) {
    const std::int64_t lo = std::max(trigger + first_offset(p.start), fired + 1);
    const std::int64_t hi = std::min(trigger + first_offset(p.start + p.length), end);
    for (std::int64_t c = lo; c < hi; ++c) enable[static_cast<std::size_t>(c - first_cycle)] = 1;
    if (hi >= end) break;
  }
}

}  // namespace

SimTrace Simulator::run(std::span<const std::uint8_t> image, const Driver& driver, std::uint64_t run_seed) const {
  const LayerSchedule& sched = accel_.schedule();
  const std::uint64_t total = sched.total_cycles;
  const std::int64_t lead = static_cast<std::int64_t>(cfg_.lead_in_cycles);
  const bool guided = driver.scheme != nullptr;
  const bool filtered = cfg_.fault_voltage == FaultVoltage::Filtered;

  Rng noise(stream_seed(run_seed, Stream::PdnNoise));
  Rng bubbles(stream_seed(run_seed, Stream::TdcBubble));
  Rng fault_rng(stream_seed(run_seed, Stream::Fault));

  SimTrace trace;
  if (cfg_.trace_enabled) trace.records.reserve(cfg_.lead_in_cycles + total);

  // Pass 1: the electrical timeline. Victim load does not depend on the
  // data, so strikes and their voltages are settled before inference. The
  // sensor chain only matters until the detector fires, unless traced.
  std::vector<std::uint8_t> enable(cfg_.lead_in_cycles + total, 0);
  if (driver.fixed)
    for (std::uint64_t c : *driver.fixed) enable[cfg_.lead_in_cycles + c] = 1;
  std::vector<double> strike_v(total, -1.0);
  VoltageState vs = VoltageState::nominal(cfg_.pdn);
  DetectorState det;
  Striker striker(cfg_.striker);

  for (std::int64_t t = -lead; t < static_cast<std::int64_t>(total); ++t) {
    const bool en = enable[static_cast<std::size_t>(t + lead)] != 0;
    const std::uint64_t ut = static_cast<std::uint64_t>(t);
    const double victim = t >= 0 ? victim_load_[ut] : 0.0;
    const double attacker = striker.step(en);
    const bool sense = cfg_.trace_enabled || filtered || (guided && !det.trigger_cycle);
    if (sense) vs = step(vs, attacker, victim, cfg_.pdn, noise);
    if (en && t >= 0) {
      strike_v[ut] = filtered ? vs.v : std::max(cfg_.pdn.resistive(attacker + victim), kMinVoltage);
      ++trace.strikes;
    }
    if (!sense) continue;  // nothing downstream reads the sensor any more
    const TdcSample s = measure(vs.v, cfg_.tdc, bubbles, t);
    if (guided && !det.trigger_cycle) {
      det = detector_step(det, s.taps, t, cfg_.detector).state;
      if (det.trigger_cycle) {
        trace.trigger_cycle = det.trigger_cycle;
        mark_scheme(*driver.scheme, *det.trigger_cycle, t, cfg_.f_main_hz, -lead, enable);
      }
    }
    if (cfg_.trace_enabled) trace.records.push_back({t, vs.v, s.count, s.taps, t >= 0 ? layer_[ut] : -1, en});
  }

  // Pass 2: inference with every DSP product routed through its slice.
  std::uint32_t n_slices = 1;
  for (const auto& w : sched.windows) n_slices = std::max(n_slices, w.slice_count());
  std::vector<DspSlice> slices;
  Rng profile(stream_seed(run_seed, Stream::SliceProfile));
  for (std::uint32_t i = 0; i < n_slices; ++i) {
    double rho = cfg_.fault.rho_dup;
    if (cfg_.fault.per_slice_profile)
      rho = std::clamp(rho + (2.0 * uniform01(profile) - 1.0) * cfg_.fault.profile_spread, 0.0, 1.0);
    slices.emplace_back(i, accel_.model().layers.front().fmt, rho);
  }

  const std::uint8_t* struck = enable.data() + cfg_.lead_in_cycles;
  DspSlice* slice0 = slices.data();
  auto on_strike = [&](const DspOpRecord& op, std::int64_t correct) {
    auto out = slice0[op.slice].execute(op, correct, strike_v[op.cycle], true, cfg_.fault, fault_rng);
    if (out.event) trace.faults.push_back(*out.event);
    return out.emitted_raw;
  };
  auto hook = [struck, slice0, &on_strike](const DspOpRecord& op, std::int64_t correct) -> std::int64_t {
    if (struck[op.cycle]) [[unlikely]]
      return on_strike(op, correct);
    slice0[op.slice].commit(op, correct);
    return correct;
  };
  auto clean = [slice0](const DspOpRecord& op, std::int64_t correct) -> std::int64_t {
    slice0[op.slice].commit(op, correct);
    return correct;
  };
  const InferenceResult r = trace.strikes > 0 ? accel_.infer(image, hook) : accel_.infer(image, clean);
  for (const Fx& s : r.scores) trace.scores.push_back(s.raw());
  trace.prediction = r.prediction;
  return trace;
}

SimTrace Simulator::run_guided(std::span<const std::uint8_t> image, const AttackScheme& scheme,
                               std::uint64_t run_seed) const {
  Driver d;
  d.scheme = &scheme;
  return run(image, d, run_seed);
}

SimTrace Simulator::run_fixed(std::span<const std::uint8_t> image, const std::vector<std::uint64_t>& strike_cycles,
                              std::uint64_t run_seed) const {
  for (std::size_t i = 0; i < strike_cycles.size(); ++i) {
    if (strike_cycles[i] >= inference_cycles())
      throw Error(ErrorCode::ArgumentOverflow, "strike cycle past the end of the inference");
    if (i > 0 && strike_cycles[i] <= strike_cycles[i - 1])
      throw Error(ErrorCode::InvalidArgument, "strike cycles must be sorted and distinct");
  }
  Driver d;
  d.fixed = &strike_cycles;
  return run(image, d, run_seed);
}

SimTrace Simulator::run_blind(std::span<const std::uint8_t> image, std::uint64_t n_strikes,
                              std::uint64_t run_seed) const {
  if (n_strikes > inference_cycles())
    throw Error(ErrorCode::ArgumentOverflow, std::to_string(n_strikes) + " strikes exceed the " +
                                                 std::to_string(inference_cycles()) + "-cycle inference");
  Rng placement(stream_seed(run_seed, Stream::BlindPlacement));
  const auto cycles = sample_without_replacement(inference_cycles(), n_strikes, placement);
  Driver d;
  d.fixed = &cycles;
  return run(image, d, run_seed);
}

SimTrace run_guided(const QuantizedModel& model, std::span<const std::uint8_t> image, const AttackScheme& scheme,
                    const SimConfig& cfg) {
  return Simulator(model, cfg).run_guided(image, scheme);
}

SimTrace run_blind(const QuantizedModel& model, std::span<const std::uint8_t> image, std::uint64_t n_strikes,
                   const SimConfig& cfg) {
  return Simulator(model, cfg).run_blind(image, n_strikes);
}

std::optional<std::int64_t> profile_trigger(const Simulator& sim, std::span<const std::uint8_t> image,
                                            std::uint64_t run_seed) {
  // A scheme of zeros never strikes, so this is the fault-free run.
  const AttackScheme idle = AttackScheme::from_runs({{false, 1}}, sim.config().f_sram_hz());
  return sim.run_guided(image, idle, run_seed).trigger_cycle;
}

std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k, Rng& rng) {
  if (k > n) throw Error(ErrorCode::ArgumentOverflow, "cannot draw more values than the population holds");
  std::vector<std::uint64_t> out;
  if (k == n) {
    out.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(k * 2);
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint64_t> strike_cycles(const LayerWindow& window, std::uint64_t n, Placement placement,
                                         std::uint64_t seed) {
  const std::uint64_t d = window.duration();
  if (n > d)
    throw Error(ErrorCode::ArgumentOverflow, std::to_string(n) + " strikes exceed the " + std::to_string(d) +
                                                 "-cycle window of " + window.name);
  std::vector<std::uint64_t> out;
  if (placement == Placement::Even) {
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(window.start_cycle + (2 * i + 1) * d / (2 * n));
  } else {
    Rng rng(seed);
    out = sample_without_replacement(d, n, rng);
    for (auto& c : out) c += window.start_cycle;
  }
  return out;
}

AttackScheme scheme_for_cycles(const std::vector<std::uint64_t>& cycles, std::int64_t trigger_cycle,
                               std::uint64_t f_sram_hz) {
  std::vector<std::uint64_t> offsets;
  offsets.reserve(cycles.size());
  for (std::uint64_t c : cycles) {
    const std::int64_t o = static_cast<std::int64_t>(c) - trigger_cycle;
    // Cycles at or before the trigger cannot be reached by the controller.
    if (o > 0) offsets.push_back(static_cast<std::uint64_t>(o));
  }
  const std::uint64_t length = offsets.empty() ? 1 : offsets.back() + 1;
  return AttackScheme::from_strikes(offsets, length, f_sram_hz);
}

void SweepConfig::validate() const {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "strike grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw Error(ErrorCode::InvalidArgument, "strike grid must be sorted");
  if (seeds == 0) throw Error(ErrorCode::InvalidArgument, "at least one seed is required");
  if (mode == AttackMode::Guided && layers.empty()) throw Error(ErrorCode::InvalidArgument, "no target layers");
}

std::vector<SweepRow> sweep_accuracy(const Simulator& sim, const Dataset& subset, const SweepConfig& cfg) {
  cfg.validate();
  if (subset.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty test subset");
  const SimConfig& sc = sim.config();
  const LayerSchedule& sched = sim.schedule();

  struct Point {
    std::string layer;
    std::uint64_t n;
    std::vector<AttackScheme> schemes;  // per seed (guided only)
  };
  std::vector<Point> points;
  std::optional<std::int64_t> trigger;
  if (cfg.mode == AttackMode::Guided) {
    const std::size_t pi = std::min(cfg.profile_image, subset.size() - 1);
    trigger = profile_trigger(sim, subset.images.image(pi), derive_seed(sc.seed, {0x9f0f11e}));
    if (!trigger) throw Error(ErrorCode::InvariantViolation, "detector did not fire during the profiling run");
    for (const auto& name : cfg.layers) {
      const LayerWindow& w = sched.window(name);
      if (cfg.grid.back() > w.duration())
        throw Error(ErrorCode::ArgumentOverflow, "grid exceeds the " + std::to_string(w.duration()) +
                                                     "-cycle window of " + name);
      for (std::uint64_t n : cfg.grid) {
        Point p{name, n, {}};
        for (std::uint32_t s = 0; s < cfg.seeds; ++s) {
          const std::uint64_t seed = derive_seed(sc.seed, {static_cast<std::uint64_t>(Stream::GuidedPlacement), s, n});
          const auto cycles = strike_cycles(w, n, sc.placement, seed);
          p.schemes.push_back(scheme_for_cycles(cycles, *trigger, sc.f_sram_hz()));
        }
        points.push_back(std::move(p));
      }
    }
  } else {
    for (std::uint64_t n : cfg.grid) {
      if (n > sim.inference_cycles()) throw Error(ErrorCode::ArgumentOverflow, "grid exceeds the inference length");
      points.push_back({"blind", n, {}});
    }
  }

  const std::size_t n_img = subset.size();
  const std::size_t per_point = static_cast<std::size_t>(cfg.seeds) * n_img;
  const std::size_t n_tasks = points.size() * per_point;
  std::vector<std::uint8_t> correct(n_tasks, 0);
  std::vector<std::uint32_t> faults(n_tasks, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    for (std::size_t i = next++; i < n_tasks && !failed; i = next++) {
      try {
        const Point& p = points[i / per_point];
        const std::uint32_t s = static_cast<std::uint32_t>((i % per_point) / n_img);
        const std::size_t img = i % n_img;
        const std::uint64_t run_seed = derive_seed(sc.seed, {s, img});
        const SimTrace t = cfg.mode == AttackMode::Guided
                               ? sim.run_guided(subset.images.image(img), p.schemes[s], run_seed)
                               : sim.run_blind(subset.images.image(img), p.n, run_seed);
        correct[i] = t.prediction == subset.labels.labels[img];
        faults[i] = static_cast<std::uint32_t>(t.faults.size());
      } catch (...) {
        std::lock_guard lk(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const unsigned jobs =
      std::max(1u, static_cast<unsigned>(std::min<std::size_t>(cfg.jobs, std::max<std::size_t>(n_tasks, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  std::vector<SweepRow> rows;
  for (std::size_t pi = 0; pi < points.size(); ++pi)
    for (std::uint32_t s = 0; s < cfg.seeds; ++s) {
      SweepRow r{points[pi].layer, points[pi].n, s, n_img, 0, 0};
      for (std::size_t img = 0; img < n_img; ++img) {
        const std::size_t i = pi * per_point + s * n_img + img;
        r.correct += correct[i];
        r.faults += faults[i];
      }
      rows.push_back(r);
    }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.layer, a.n_strikes, a.seed) < std::tie(b.layer, b.n_strikes, b.seed);
  });
  return rows;
}

std::vector<SweepPoint> summarize(const std::vector<SweepRow>& rows) {
  std::map<std::pair<std::string, std::uint64_t>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[{r.layer, r.n_strikes}].push_back(&r);
  std::vector<SweepPoint> out;
  for (const auto& [key, members] : groups) {
    SweepPoint p{key.first, key.second, 0, 0, 0};
    for (const SweepRow* r : members) {
      p.mean_accuracy += r->accuracy();
      p.mean_faults += static_cast<double>(r->faults);
    }
    const double n = static_cast<double>(members.size());
    p.mean_accuracy /= n;
    p.mean_faults /= n;
    if (members.size() > 1) {
      double ss = 0;
      for (const SweepRow* r : members) ss += (r->accuracy() - p.mean_accuracy) * (r->accuracy() - p.mean_accuracy);
      p.stddev = std::sqrt(ss / (n - 1));
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string layer_label(const LayerSchedule& sched, int idx) {
  return idx < 0 ? std::string("-") : sched.windows[static_cast<std::size_t>(idx)].name;
}

}  // namespace

Table trace_table(const SimTrace& trace, const LayerSchedule& schedule) {
  Table t({"cycle", "v", "count", "taps", "layer", "enable"});
  for (const auto& r : trace.records)
    t.add_row({r.cycle, r.v, std::int64_t{r.count}, std::int64_t{r.taps}, layer_label(schedule, r.layer),
               std::int64_t{r.enable}});
  return t;
}

Table faults_table(const SimTrace& trace, const LayerSchedule& schedule) {
  Table t({"cycle", "slice", "layer", "op_index", "kind", "correct", "emitted"});
  for (const auto& e : trace.faults)
    t.add_row({e.cycle, std::int64_t{e.slice}, layer_label(schedule, static_cast<int>(e.layer)),
               static_cast<std::int64_t>(e.op_index), std::string(to_string(e.kind)), e.correct_raw, e.emitted_raw});
  return t;
}

Table sweep_table(const std::vector<SweepRow>& rows) {
  Table t({"layer", "n_strikes", "seed", "accuracy", "faults"});
  for (const auto& r : rows)
    t.add_row({r.layer, static_cast<std::int64_t>(r.n_strikes), std::int64_t{r.seed}, r.accuracy(),
               static_cast<std::int64_t>(r.faults)});
  return t;
}

Table summary_table(const std::vector<SweepPoint>& points) {
  Table t({"layer", "n_strikes", "mean_accuracy", "stddev", "mean_faults"});
  for (const auto& p : points)
    t.add_row({p.layer, static_cast<std::int64_t>(p.n_strikes), p.mean_accuracy, p.stddev, p.mean_faults});
  return t;
}

}  // namespace glitchsim
