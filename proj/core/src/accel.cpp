#include "glitchsim/accel.hpp"

#include <string>

namespace glitchsim {

void ScheduleConfig::validate() const {
  if (conv_parallelism == 0 || fc_parallelism == 0 || pool_parallelism == 0)
    throw Error(ErrorCode::InvalidArgument, "parallelism must be at least 1");
  if (i_dsp < 0 || i_cmp < 0) throw Error(ErrorCode::InvalidArgument, "load constants must be non-negative");
}

std::uint64_t LayerWindow::active_ops(std::uint64_t cycle) const {
  if (!contains(cycle)) return 0;
  const std::uint64_t done = (cycle - start_cycle) * parallelism;
  return std::min<std::uint64_t>(parallelism, op_count - done);
}

int LayerSchedule::window_at(std::uint64_t cycle) const {
  // Windows are few (five for LeNet); a linear scan beats anything clever.
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (windows[i].contains(cycle)) return static_cast<int>(i);
  return -1;
}

const LayerWindow& LayerSchedule::window(const std::string& name) const {
  for (const auto& w : windows)
    if (w.name == name) return w;
  throw Error(ErrorCode::InvalidArgument, "no layer named '" + name + "' in the schedule");
}

LayerSchedule compile_schedule(const QuantizedModel& model, const ScheduleConfig& cfg) {
  cfg.validate();
  const auto shapes = model.shapes();
  const auto names = model.names();
  LayerSchedule s;
  s.stall_cycles = cfg.stall_cycles;
  std::uint64_t cursor = 0;
  for (std::uint32_t i = 0; i < model.layers.size(); ++i) {
    const QLayer& l = model.layers[i];
    LayerWindow w;
    w.name = names[i];
    w.kind = l.kind;
    w.layer_id = i;
    switch (l.kind) {
      case LayerKind::Conv:
        w.parallelism = cfg.conv_parallelism;
        w.op_count = shapes[i + 1].size() * std::uint64_t{l.dims[1]} * l.dims[2] * l.dims[3];
        break;
      case LayerKind::Pool:
        w.parallelism = cfg.pool_parallelism;
        w.op_count = shapes[i + 1].size() * (std::uint64_t{l.dims[0]} * l.dims[1] - 1);
        break;
      case LayerKind::Fc:
        w.parallelism = cfg.fc_parallelism;
        w.op_count = std::uint64_t{l.dims[0]} * l.dims[1];
        break;
    }
    if (i > 0) cursor += cfg.stall_cycles;
    w.start_cycle = cursor;
    w.end_cycle = cursor + (w.op_count + w.parallelism - 1) / w.parallelism;
    cursor = w.end_cycle;
    s.windows.push_back(std::move(w));
  }
  s.total_cycles = cursor;
  return s;
}

double victim_load(const LayerSchedule& schedule, const ScheduleConfig& cfg, std::uint64_t cycle) {
  const int idx = schedule.window_at(cycle);
  if (idx < 0) return 0.0;
  const LayerWindow& w = schedule.windows[static_cast<std::size_t>(idx)];
  const double per_op = w.dsp_mapped() ? cfg.i_dsp : cfg.i_cmp;
  return per_op * static_cast<double>(w.active_ops(cycle));
}

int argmax_lowest(std::span<const std::int64_t> values) {
  if (values.empty()) return -1;
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return static_cast<int>(best);
}

Accelerator::Accelerator(QuantizedModel model, ScheduleConfig cfg)
    : model_(std::move(model)), cfg_(cfg), tanh_((model_.validate(), model_.layers.front().fmt)) {
  schedule_ = compile_schedule(model_, cfg_);
  shapes_ = model_.shapes();
  const QFormat& fmt = model_.layers.front().fmt;
  pixel_codes_.resize(256);
  for (int p = 0; p < 256; ++p) pixel_codes_[p] = static_cast<std::int32_t>(quantize_raw(p / 256.0, fmt));
  if (fmt.total_bits <= 8) {
    const std::int64_t n = fmt.code_count(), lo = fmt.min_raw(), hi = fmt.max_raw();
    products_.resize(static_cast<std::size_t>(n * n));
    for (std::int64_t a = 0; a < n; ++a)
      for (std::int64_t b = 0; b < n; ++b)
        products_[a * n + b] = static_cast<std::int16_t>(detail::mul_codes(a + lo, b + lo, fmt.frac_bits(), lo, hi));
  }
}

std::vector<std::int32_t> Accelerator::input_codes(std::span<const std::uint8_t> image) const {
  std::vector<std::int32_t> codes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) codes[i] = pixel_codes_[image[i]];
  return codes;
}

}  // namespace glitchsim
