#pragma once

// Victim accelerator: maps quantized LeNet inference onto a timed stream of
// DSP multiply operations and reports the per-cycle electrical load it draws.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glitchsim/errors.hpp"
#include "glitchsim/fxp.hpp"
#include "glitchsim/model.hpp"

namespace glitchsim {

struct ScheduleConfig {
  std::uint32_t conv_parallelism = 8;  // DSP ops per main cycle
  std::uint32_t fc_parallelism = 4;
  std::uint32_t pool_parallelism = 4;  // comparator ops per main cycle
  std::uint64_t stall_cycles = 1000;
  double i_dsp = 1.0;   // load units per active DSP op
  double i_cmp = 0.15;  // load units per active compare op

  void validate() const;
};

struct LayerWindow {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  std::uint32_t layer_id = 0;
  std::uint64_t start_cycle = 0;  // inclusive
  std::uint64_t end_cycle = 0;    // exclusive
  std::uint32_t parallelism = 1;
  std::uint64_t op_count = 0;

  std::uint64_t duration() const { return end_cycle - start_cycle; }
  bool dsp_mapped() const { return kind != LayerKind::Pool; }
  /// Physical slices used: double data rate lets each slice issue two ops per
  /// main cycle.
  std::uint32_t slice_count() const { return (parallelism + 1) / 2; }
  bool contains(std::uint64_t cycle) const { return cycle >= start_cycle && cycle < end_cycle; }
  /// Ops issued in the given cycle (0 outside the window).
  std::uint64_t active_ops(std::uint64_t cycle) const;
};

struct LayerSchedule {
  std::vector<LayerWindow> windows;
  std::uint64_t stall_cycles = 0;
  std::uint64_t total_cycles = 0;

  /// Index into windows, or -1 for stall cycles and cycles past the end.
  int window_at(std::uint64_t cycle) const;
  /// Throws InvalidArgument for unknown names.
  const LayerWindow& window(const std::string& name) const;
};

LayerSchedule compile_schedule(const QuantizedModel& model, const ScheduleConfig& cfg);

/// load = i_dsp * active DSP ops + i_cmp * active compare ops; zero in stalls.
double victim_load(const LayerSchedule& schedule, const ScheduleConfig& cfg, std::uint64_t cycle);

/// One multiply issued to a DSP slice configured as (a + b) * c. The victim
/// feeds activation into a, leaves the pre-adder input b at zero and puts the
/// weight in c.
struct DspOpRecord {
  std::uint32_t layer_id = 0;
  std::uint64_t op_index = 0;  // flat index within the layer
  std::int64_t a_raw = 0;
  std::int64_t b_raw = 0;
  std::int64_t c_raw = 0;
  const QFormat* fmt = nullptr;
  std::uint64_t cycle = 0;  // main-clock cycle
  std::uint32_t slice = 0;
  std::uint32_t phase = 0;  // DSP sub-cycle within the main cycle (0 or 1)

  Fx a() const { return Fx(a_raw, *fmt); }
  Fx b() const { return Fx(b_raw, *fmt); }
  Fx c() const { return Fx(c_raw, *fmt); }
};

struct InferenceResult {
  std::vector<Fx> scores;
  int prediction = -1;
};

/// Argmax with ties resolved toward the lowest index.
int argmax_lowest(std::span<const std::int64_t> values);

class Accelerator {
 public:
  explicit Accelerator(QuantizedModel model, ScheduleConfig cfg = {});

  const QuantizedModel& model() const { return model_; }
  const LayerSchedule& schedule() const { return schedule_; }
  const ScheduleConfig& config() const { return cfg_; }
  const TanhTable& tanh_table() const { return tanh_; }

  /// Input pixels mapped to [0, 1) by /256, then quantized.
  std::vector<std::int32_t> input_codes(std::span<const std::uint8_t> image) const;

  /// Runs inference, passing every conv/fc multiply through
  /// `hook(const DspOpRecord&, std::int64_t correct_raw) -> std::int64_t`,
  /// whose return value is accumulated in place of the correct product.
  /// Pooling and tanh are never routed through the hook.
  template <class Hook>
  InferenceResult infer(std::span<const std::uint8_t> image, Hook&& hook) const;

  InferenceResult infer(std::span<const std::uint8_t> image) const {
    return infer(image, [](const DspOpRecord&, std::int64_t p) { return p; });
  }

 private:
  QuantizedModel model_;
  ScheduleConfig cfg_;
  LayerSchedule schedule_;
  std::vector<Shape> shapes_;
  TanhTable tanh_;
  std::vector<std::int32_t> pixel_codes_;
  // Exact product of every code pair, for formats of at most 8 bits.
  std::vector<std::int16_t> products_;
};

namespace detail {

/// Issue-slot bookkeeping: op k of a layer lands in cycle start + k / P, in
/// slot j = k % P, on slice j % slices during DSP phase j / slices.
struct OpClock {
  std::uint64_t cycle;
  std::uint32_t parallelism;
  std::uint32_t slices;
  std::uint32_t slot = 0;
  std::uint32_t slice = 0;
  std::uint32_t phase = 0;

  void advance() {
    if (++slot == parallelism) {
      slot = slice = phase = 0;
      ++cycle;
      return;
    }
    if (++slice == slices) {
      slice = 0;
      ++phase;
    }
  }
};

/// Product of two raw codes, rescaled with ties-to-even and saturated. Valid
/// for formats up to 16 bits, where the exact product fits in 64 bits.
inline std::int64_t mul_codes(std::int64_t a, std::int64_t b, int frac, std::int64_t lo, std::int64_t hi) {
  const std::int64_t v = a * b;
  std::int64_t q = v >> frac;
  if (frac > 0) {
    const std::int64_t r = v - (q << frac);
    const std::int64_t half = std::int64_t{1} << (frac - 1);
    if (r > half || (r == half && (q & 1))) ++q;
  }
  return std::clamp(q, lo, hi);
}

}  // namespace detail

template <class Hook>
InferenceResult Accelerator::infer(std::span<const std::uint8_t> image, Hook&& hook) const {
  const Shape& in_shape = shapes_.front();
  if (image.size() != in_shape.size())
    throw Error(ErrorCode::ShapeMismatch, "image has " + std::to_string(image.size()) + " pixels, expected " +
                                              std::to_string(in_shape.size()));

  std::vector<std::int32_t> cur = input_codes(image);
  std::vector<std::int32_t> next;

  for (std::uint32_t li = 0; li < model_.layers.size(); ++li) {
    const QLayer& layer = model_.layers[li];
    const Shape& is = shapes_[li];
    const Shape& os = shapes_[li + 1];
    const QFormat& fmt = layer.fmt;
    const int frac = fmt.frac_bits();
    const std::int64_t lo = fmt.min_raw();
    const std::int64_t hi = fmt.max_raw();
    const LayerWindow& win = schedule_.windows[li];
    const std::int16_t* table = products_.empty() ? nullptr : products_.data();
    const std::int64_t n_codes = fmt.code_count();
    next.assign(os.size(), 0);

    auto finish = [&](std::int64_t acc, std::int64_t bias) -> std::int32_t {
      const std::int64_t pre = std::clamp(acc + bias, lo, hi);
      return static_cast<std::int32_t>(layer.activation == Activation::Tanh ? tanh_.lookup_raw(pre) : pre);
    };

    DspOpRecord rec;
    rec.layer_id = li;
    rec.fmt = &fmt;
    detail::OpClock clk{win.start_cycle, win.parallelism, win.slice_count()};
    std::uint64_t k = 0;
    auto issue = [&](std::int64_t x, std::int64_t w) -> std::int64_t {
      rec.op_index = k++;
      rec.a_raw = x;
      rec.c_raw = w;
      rec.cycle = clk.cycle;
      rec.slice = clk.slice;
      rec.phase = clk.phase;
      const std::int64_t correct =
          table ? table[(x - lo) * n_codes + (w - lo)] : detail::mul_codes(x, w, frac, lo, hi);
      const std::int64_t emitted = hook(static_cast<const DspOpRecord&>(rec), correct);
      clk.advance();
      return emitted;
    };

    switch (layer.kind) {
      case LayerKind::Conv: {
        const std::uint32_t kh = layer.dims[2], kw = layer.dims[3];
        for (std::uint32_t oc = 0; oc < os.channels; ++oc) {
          for (std::uint32_t oy = 0; oy < os.height; ++oy) {
            for (std::uint32_t ox = 0; ox < os.width; ++ox) {
              std::int64_t acc = 0;
              for (std::uint32_t ic = 0; ic < is.channels; ++ic) {
                const std::int32_t* wrow = &layer.weights[((std::size_t{oc} * is.channels + ic) * kh) * kw];
                for (std::uint32_t ky = 0; ky < kh; ++ky) {
                  const std::int32_t* xrow = &cur[(std::size_t{ic} * is.height + oy + ky) * is.width + ox];
                  for (std::uint32_t kx = 0; kx < kw; ++kx) acc += issue(xrow[kx], wrow[ky * kw + kx]);
                }
              }
              next[(std::size_t{oc} * os.height + oy) * os.width + ox] = finish(acc, layer.biases[oc]);
            }
          }
        }
        break;
      }
      case LayerKind::Pool: {
        const std::uint32_t ph = layer.dims[0], pw = layer.dims[1], sh = layer.dims[2], sw = layer.dims[3];
        for (std::uint32_t c = 0; c < os.channels; ++c)
          for (std::uint32_t oy = 0; oy < os.height; ++oy)
            for (std::uint32_t ox = 0; ox < os.width; ++ox) {
              std::int32_t m = cur[(std::size_t{c} * is.height + oy * sh) * is.width + ox * sw];
              for (std::uint32_t y = 0; y < ph; ++y)
                for (std::uint32_t x = 0; x < pw; ++x)
                  m = std::max(m, cur[(std::size_t{c} * is.height + oy * sh + y) * is.width + ox * sw + x]);
              next[(std::size_t{c} * os.height + oy) * os.width + ox] = m;
            }
        break;
      }
      case LayerKind::Fc: {
        const std::size_t n_in = layer.dims[1];
        for (std::uint32_t o = 0; o < layer.dims[0]; ++o) {
          const std::int32_t* wrow = &layer.weights[std::size_t{o} * n_in];
          std::int64_t acc = 0;
          for (std::size_t i = 0; i < n_in; ++i) acc += issue(cur[i], wrow[i]);
          next[o] = finish(acc, layer.biases[o]);
        }
        break;
      }
    }
    cur.swap(next);
  }

  InferenceResult result;
  std::vector<std::int64_t> raw(cur.begin(), cur.end());
  const QFormat& out_fmt = model_.layers.back().fmt;
  for (auto r : raw) result.scores.emplace_back(r, out_fmt);
  result.prediction = argmax_lowest(raw);
  return result;
}

}  // namespace glitchsim
