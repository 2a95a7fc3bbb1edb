#pragma once

// Saturating fixed-point scalars in a configurable Q-format, plus the tanh
// lookup table used as the victim network's activation.

#include <cstdint>
#include <vector>

namespace glitchsim {

/// Q-format descriptor. In signed mode the sign bit is counted inside
/// integer_bits, so the default Q3.5 covers [-4, 3.96875] in steps of 1/32.
struct QFormat {
  int total_bits = 8;
  int integer_bits = 3;
  bool is_signed = true;

  constexpr int frac_bits() const { return total_bits - integer_bits; }
  constexpr std::int64_t min_raw() const {
    return is_signed ? -(std::int64_t{1} << (total_bits - 1)) : 0;
  }
  constexpr std::int64_t max_raw() const {
    return is_signed ? (std::int64_t{1} << (total_bits - 1)) - 1 : (std::int64_t{1} << total_bits) - 1;
  }
  constexpr std::int64_t code_count() const { return max_raw() - min_raw() + 1; }
  double lsb() const;
  double min_value() const;
  double max_value() const;

  /// Throws InvalidArgument unless 1 <= integer_bits <= total_bits <= 32.
  void validate() const;

  friend constexpr bool operator==(const QFormat&, const QFormat&) = default;
};

inline constexpr QFormat kQ3_5{};

class Fx {
 public:
  constexpr Fx() = default;
  /// Saturates raw into the representable range of fmt.
  Fx(std::int64_t raw, QFormat fmt);

  constexpr std::int64_t raw() const { return raw_; }
  constexpr const QFormat& format() const { return fmt_; }
  double real() const;

  friend constexpr bool operator==(const Fx& a, const Fx& b) { return a.raw_ == b.raw_ && a.fmt_ == b.fmt_; }

 private:
  std::int64_t raw_ = 0;
  QFormat fmt_{};
};

// Raw-code helpers shared by Fx and the inference hot loops.
std::int64_t saturate_raw(std::int64_t v, const QFormat& fmt);
/// Arithmetic right shift by `shift` bits with round-half-to-even.
std::int64_t shift_round_even(__int128 v, int shift);
inline std::int64_t add_raw(std::int64_t a, std::int64_t b, const QFormat& fmt) {
  return saturate_raw(a + b, fmt);
}
inline std::int64_t mul_raw(std::int64_t a, std::int64_t b, const QFormat& fmt) {
  return saturate_raw(shift_round_even(static_cast<__int128>(a) * b, fmt.frac_bits()), fmt);
}

/// Nearest representable value, ties to even; out-of-range and infinite
/// inputs saturate, NaN maps to the code nearest zero.
Fx quantize(double x, const QFormat& fmt);
std::int64_t quantize_raw(double x, const QFormat& fmt);

/// Both operands must share a format; throws InvalidArgument otherwise.
Fx fx_add(const Fx& a, const Fx& b);
Fx fx_mul(const Fx& a, const Fx& b);

/// How an unsigned format stores tanh, whose range is [-1, 1].
enum class UnsignedTanh {
  Shift,  // stores (tanh(x) + 1) / 2
  Clip,   // stores max(tanh(x), 0)
};

/// tanh evaluated once per raw code of the input format.
class TanhTable {
 public:
  explicit TanhTable(QFormat fmt, UnsignedTanh mode = UnsignedTanh::Shift);

  const QFormat& format() const { return fmt_; }
  std::int64_t lookup_raw(std::int64_t raw) const { return table_[static_cast<std::size_t>(raw - fmt_.min_raw())]; }
  Fx operator()(const Fx& x) const;

 private:
  QFormat fmt_;
  std::vector<std::int64_t> table_;
};

/// Uses a process-wide table cache keyed by format (signed or Shift mode).
Fx fx_tanh(const Fx& x);

}  // namespace glitchsim
