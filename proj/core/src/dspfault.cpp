#include "glitchsim/dspfault.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "glitchsim/errors.hpp"

namespace glitchsim {

void FaultConfig::validate() const {
  if (!(v_width > 0)) throw Error(ErrorCode::InvalidArgument, "v_width must be positive");
  if (!(rho_dup >= 0 && rho_dup <= 1)) throw Error(ErrorCode::InvalidArgument, "rho_dup must be in [0, 1]");
  if (!(profile_spread >= 0)) throw Error(ErrorCode::InvalidArgument, "profile_spread must be non-negative");
  if (!(v_nom > 0)) throw Error(ErrorCode::InvalidArgument, "v_nom must be positive");
}

const char* to_string(FaultKind kind) { return kind == FaultKind::Duplication ? "duplication" : "random"; }

Fx dsp_op(const Fx& a, const Fx& b, const Fx& c) { return fx_mul(fx_add(a, b), c); }

std::int64_t dsp_op_raw(std::int64_t a, std::int64_t b, std::int64_t c, const QFormat& fmt) {
  return mul_raw(add_raw(a, b, fmt), c, fmt);
}

double fault_probability(double v, const FaultConfig& cfg) {
  return std::clamp(((cfg.v_nom - v) - cfg.v_safe) / cfg.v_width, 0.0, 1.0);
}

DspSlice::DspSlice(std::uint32_t id, const QFormat& fmt, double rho_dup) : id_(id), fmt_(fmt), rho_dup_(rho_dup) {
  fmt_.validate();
  if (!(rho_dup >= 0 && rho_dup <= 1)) throw Error(ErrorCode::InvalidArgument, "rho_dup must be in [0, 1]");
}

DspSlice::Outcome DspSlice::resolve(const DspOpRecord& op, std::int64_t correct_raw, std::optional<FaultKind> kind,
                                    Rng& rng) {
  Outcome out;
  if (!kind) {
    out.emitted_raw = correct_raw;
  } else {
    out.emitted_raw = *kind == FaultKind::Duplication
                          ? last_correct_
                          : fmt_.min_raw() + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(fmt_.code_count()));
    out.event = FaultEvent{static_cast<std::int64_t>(op.cycle), id_, op.layer_id, op.op_index, *kind, correct_raw,
                           out.emitted_raw};
  }
  // A late result still lands one clock later, so it becomes the value a
  // following duplication repeats. A random fault leaves it untouched.
  if (!kind || *kind == FaultKind::Duplication) last_correct_ = correct_raw;
  push(dsp_cycle_of(op), out.emitted_raw);
  return out;
}

DspSlice::Outcome DspSlice::execute(const DspOpRecord& op, std::int64_t correct_raw, double v, bool strike_active,
                                    const FaultConfig& cfg, Rng& rng) {
  std::optional<FaultKind> kind;
  if (strike_active) {
    const double p = fault_probability(v, cfg);
    if (p > 0 && uniform01(rng) < p)
      kind = uniform01(rng) < rho_dup_ ? FaultKind::Duplication : FaultKind::Random;
  }
  return resolve(op, correct_raw, kind, rng);
}

DspSlice::Outcome DspSlice::execute(const DspOpRecord& op, double v, bool strike_active, const FaultConfig& cfg,
                                    Rng& rng) {
  return execute(op, dsp_op_raw(op.a_raw, op.b_raw, op.c_raw, *op.fmt), v, strike_active, cfg, rng);
}

DspSlice::Outcome DspSlice::execute_forced(const DspOpRecord& op, std::optional<FaultKind> kind, Rng& rng) {
  return resolve(op, dsp_op_raw(op.a_raw, op.b_raw, op.c_raw, *op.fmt), kind, rng);
}

std::vector<DspSlice::InFlight> DspSlice::in_flight(std::uint64_t dsp_cycle) const {
  std::vector<InFlight> out;
  const std::uint64_t n = std::min<std::uint64_t>(issued_, kDspPipelineDepth);
  for (std::uint64_t k = n; k > 0; --k) {
    const InFlight& f = pipe_[(head_ + kDspPipelineDepth - k) % kDspPipelineDepth];
    if (f.issue_dsp_cycle <= dsp_cycle && dsp_cycle < visible_cycle(f.issue_dsp_cycle)) out.push_back(f);
  }
  return out;
}

void CharacterizeConfig::validate() const {
  if (cells.empty()) throw Error(ErrorCode::InvalidArgument, "cell grid is empty");
  if (trials == 0 || seeds == 0) throw Error(ErrorCode::InvalidArgument, "trials and seeds must be positive");
  pdn.validate();
  striker.validate();
  fault.validate();
  fmt.validate();
}

CharacterizeRow characterize_point(std::uint64_t n_cells, std::uint64_t seed, const CharacterizeConfig& cfg) {
  const std::uint64_t run_seed = derive_seed(cfg.master_seed, {n_cells, seed});
  Rng operands(stream_seed(run_seed, Stream::Operands));
  Rng noise(stream_seed(run_seed, Stream::PdnNoise));
  Rng faults(stream_seed(run_seed, Stream::Fault));

  StrikerConfig sc = cfg.striker;
  sc.n_cells = n_cells;
  DspSlice slice(0, cfg.fmt, cfg.fault.rho_dup);
  const std::uint64_t codes = cfg.fmt.code_count();

  CharacterizeRow row{n_cells, cfg.trials, 0, 0};
  DspOpRecord op;
  op.fmt = &cfg.fmt;
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    op.op_index = t;
    op.cycle = t;
    op.a_raw = cfg.fmt.min_raw() + static_cast<std::int64_t>(operands() % codes);
    op.b_raw = cfg.fmt.min_raw() + static_cast<std::int64_t>(operands() % codes);
    op.c_raw = cfg.fmt.min_raw() + static_cast<std::int64_t>(operands() % codes);
    Striker striker(sc);
    const VoltageState vs = step(VoltageState::nominal(cfg.pdn), striker.step(true), 0.0, cfg.pdn, noise);
    const auto out = slice.execute(op, vs.v_local, true, cfg.fault, faults);
    if (out.event) ++(out.event->kind == FaultKind::Duplication ? row.dup : row.rand);
  }
  return row;
}

std::vector<CharacterizeRow> characterize(const CharacterizeConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.cells.size() * cfg.seeds;
  std::vector<CharacterizeRow> parts(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++)
      parts[i] = characterize_point(cfg.cells[i / cfg.seeds], i % cfg.seeds, cfg);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<CharacterizeRow> rows;
  for (std::size_t c = 0; c < cfg.cells.size(); ++c) {
    CharacterizeRow r{cfg.cells[c], 0, 0, 0};
    for (std::uint32_t s = 0; s < cfg.seeds; ++s) {
      const auto& p = parts[c * cfg.seeds + s];
      r.trials += p.trials;
      r.dup += p.dup;
      r.rand += p.rand;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace glitchsim
