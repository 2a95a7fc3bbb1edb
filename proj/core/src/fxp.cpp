#include "glitchsim/fxp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include "glitchsim/errors.hpp"

namespace glitchsim {

double QFormat::lsb() const { return std::ldexp(1.0, -frac_bits()); }
double QFormat::min_value() const { return static_cast<double>(min_raw()) * lsb(); }
double QFormat::max_value() const { return static_cast<double>(max_raw()) * lsb(); }

void QFormat::validate() const {
  if (integer_bits < 1 || integer_bits > total_bits || total_bits > 32) {
    throw Error(ErrorCode::InvalidArgument, "invalid Q-format: total_bits=" + std::to_string(total_bits) +
                                                " integer_bits=" + std::to_string(integer_bits));
  }
}

std::int64_t saturate_raw(std::int64_t v, const QFormat& fmt) {
  return std::clamp(v, fmt.min_raw(), fmt.max_raw());
}

std::int64_t shift_round_even(__int128 v, int shift) {
  if (shift <= 0) return static_cast<std::int64_t>(v << -shift);
  const __int128 q = v >> shift;  // floor
  const __int128 r = v - (q << shift);
  const __int128 half = static_cast<__int128>(1) << (shift - 1);
  if (r > half || (r == half && (q & 1) != 0)) return static_cast<std::int64_t>(q + 1);
  return static_cast<std::int64_t>(q);
}

Fx::Fx(std::int64_t raw, QFormat fmt) : raw_(saturate_raw(raw, fmt)), fmt_(fmt) {}

double Fx::real() const { return static_cast<double>(raw_) * fmt_.lsb(); }

std::int64_t quantize_raw(double x, const QFormat& fmt) {
  if (std::isnan(x)) return saturate_raw(0, fmt);
  const double scaled = std::ldexp(x, fmt.frac_bits());
  if (scaled >= static_cast<double>(fmt.max_raw())) return fmt.max_raw();
  if (scaled <= static_cast<double>(fmt.min_raw())) return fmt.min_raw();
  // Default floating-point environment rounds to nearest, ties to even.
  return static_cast<std::int64_t>(std::nearbyint(scaled));
}

Fx quantize(double x, const QFormat& fmt) { return Fx(quantize_raw(x, fmt), fmt); }

namespace {

void require_same_format(const Fx& a, const Fx& b) {
  if (!(a.format() == b.format())) throw Error(ErrorCode::InvalidArgument, "fixed-point operands differ in format");
}

}  // namespace

Fx fx_add(const Fx& a, const Fx& b) {
  require_same_format(a, b);
  return Fx(add_raw(a.raw(), b.raw(), a.format()), a.format());
}

Fx fx_mul(const Fx& a, const Fx& b) {
  require_same_format(a, b);
  return Fx(mul_raw(a.raw(), b.raw(), a.format()), a.format());
}

TanhTable::TanhTable(QFormat fmt, UnsignedTanh mode) : fmt_(fmt) {
  fmt_.validate();
  if (fmt_.total_bits > 16) throw Error(ErrorCode::InvalidArgument, "tanh table limited to formats of at most 16 bits");
  table_.reserve(static_cast<std::size_t>(fmt_.code_count()));
  for (std::int64_t r = fmt_.min_raw(); r <= fmt_.max_raw(); ++r) {
    const double t = std::tanh(static_cast<double>(r) * fmt_.lsb());
    double stored = t;
    if (!fmt_.is_signed) stored = mode == UnsignedTanh::Shift ? (t + 1.0) / 2.0 : std::max(t, 0.0);
    table_.push_back(quantize_raw(stored, fmt_));
  }
}

Fx TanhTable::operator()(const Fx& x) const {
  if (!(x.format() == fmt_)) throw Error(ErrorCode::InvalidArgument, "tanh table format mismatch");
  return Fx(lookup_raw(x.raw()), fmt_);
}

Fx fx_tanh(const Fx& x) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, bool>, std::unique_ptr<TanhTable>> cache;
  const QFormat& f = x.format();
  const TanhTable* table = nullptr;
  {
    std::lock_guard lock(mu);
    auto& slot = cache[{f.total_bits, f.integer_bits, f.is_signed}];
    if (!slot) slot = std::make_unique<TanhTable>(f);
    table = slot.get();
  }
  return (*table)(x);
}

}  // namespace glitchsim
