#include "glitchsim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glitchsim/accel.hpp"
#include "glitchsim/errors.hpp"
#include "glitchsim/nn.hpp"
#include "glitchsim/rng.hpp"

namespace glitchsim {

std::vector<Shape> FloatModel::shapes() const {
  std::vector<Shape> s{input_shape};
  for (const auto& l : layers) s.push_back(output_shape(l.kind, l.dims, s.back()));
  return s;
}

void FloatModel::validate() const {
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  shapes();
  for (const auto& l : layers) {
    if (l.weights.size() != weight_count(l.kind, l.dims) || l.biases.size() != bias_count(l.kind, l.dims))
      throw Error(ErrorCode::ShapeMismatch, "parameter count does not match dims");
    auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.begin(), l.weights.end(), finite) || !std::all_of(l.biases.begin(), l.biases.end(), finite))
      throw Error(ErrorCode::InvalidArgument, "non-finite parameter");
  }
}

FloatModel make_float_model(const std::vector<std::pair<LayerKind, LayerDims>>& topology, Shape input) {
  FloatModel m;
  m.input_shape = input;
  for (const auto& [kind, dims] : topology)
    m.layers.push_back({kind, dims, std::vector<float>(weight_count(kind, dims)), std::vector<float>(bias_count(kind, dims))});
  m.shapes();
  return m;
}

FloatModel init_lenet(std::uint64_t seed) {
  FloatModel m = make_float_model(lenet_topology());
  Rng rng(derive_seed(seed, {0x1417}));
  for (auto& l : m.layers) {
    if (l.kind == LayerKind::Pool) continue;
    double fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::Conv) {
      fan_in = double(l.dims[1]) * l.dims[2] * l.dims[3];
      fan_out = double(l.dims[0]) * l.dims[2] * l.dims[3];
    } else {
      fan_in = l.dims[1];
      fan_out = l.dims[0];
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : l.weights) w = static_cast<float>((2.0 * uniform01(rng) - 1.0) * limit);
  }
  return m;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || batch_size == 0 || epochs == 0)
    throw Error(ErrorCode::InvalidArgument, "learning rate, batch size and epochs must be positive");
}

namespace {

class Network {
 public:
  explicit Network(const FloatModel& m) : model_(m), shapes_(m.shapes()) {
    std::vector<LayerKind> kinds;
    for (const auto& l : m.layers) kinds.push_back(l.kind);
    acts_kind_ = positional_activations(kinds);
    acts_.resize(shapes_.size());
    for (std::size_t i = 0; i < shapes_.size(); ++i) acts_[i].resize(shapes_[i].size());
    winners_.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i)
      if (m.layers[i].kind == LayerKind::Pool) winners_[i].resize(shapes_[i + 1].size());
    grads_.resize(shapes_.size());
    for (std::size_t i = 0; i < shapes_.size(); ++i) grads_[i].resize(shapes_[i].size());
  }

  const std::vector<float>& forward(std::span<const std::uint8_t> image) {
    auto& x = acts_[0];
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(image[i]) / 256.0f;
    for (std::size_t i = 0; i < model_.layers.size(); ++i) {
      const FloatLayer& l = model_.layers[i];
      const float* in = acts_[i].data();
      float* out = acts_[i + 1].data();
      switch (l.kind) {
        case LayerKind::Conv:
          nn::conv_forward(in, shapes_[i], l.weights.data(), l.biases.data(), l.dims, out, shapes_[i + 1]);
          break;
        case LayerKind::Pool: nn::pool_forward(in, shapes_[i], l.dims, out, shapes_[i + 1], winners_[i].data()); break;
        case LayerKind::Fc:
          nn::fc_forward(in, shapes_[i].size(), l.weights.data(), l.biases.data(), shapes_[i + 1].size(), out);
          break;
      }
      if (acts_kind_[i] == Activation::Tanh) nn::tanh_forward(out, acts_[i + 1].size());
    }
    return acts_.back();
  }

  /// Forward + backward for one sample; accumulates into grad. Returns loss.
  float accumulate(std::span<const std::uint8_t> image, std::uint8_t label, FloatModel& grad) {
    const auto& logits = forward(image);
    const std::size_t L = model_.layers.size();
    const float loss = nn::softmax_xent(logits.data(), logits.size(), label, grads_[L].data());
    for (std::size_t i = L; i-- > 0;) {
      const FloatLayer& l = model_.layers[i];
      FloatLayer& g = grad.layers[i];
      float* dout = grads_[i + 1].data();
      if (acts_kind_[i] == Activation::Tanh) nn::tanh_backward(acts_[i + 1].data(), dout, grads_[i + 1].size());
      float* din = i > 0 ? grads_[i].data() : nullptr;
      switch (l.kind) {
        case LayerKind::Conv:
          nn::conv_backward(acts_[i].data(), shapes_[i], l.weights.data(), l.dims, dout, shapes_[i + 1], g.weights.data(),
                            g.biases.data(), din);
          break;
        case LayerKind::Pool:
          if (din) nn::pool_backward(dout, shapes_[i + 1], winners_[i].data(), din, shapes_[i]);
          break;
        case LayerKind::Fc:
          nn::fc_backward(acts_[i].data(), shapes_[i].size(), l.weights.data(), shapes_[i + 1].size(), dout,
                          g.weights.data(), g.biases.data(), din);
          break;
      }
    }
    return loss;
  }

 private:
  const FloatModel& model_;
  std::vector<Shape> shapes_;
  std::vector<Activation> acts_kind_;
  std::vector<std::vector<float>> acts_;
  std::vector<std::vector<float>> grads_;
  std::vector<std::vector<std::uint32_t>> winners_;
};

void zero(FloatModel& g) {
  for (auto& l : g.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0f);
    std::fill(l.biases.begin(), l.biases.end(), 0.0f);
  }
}

void require_nonempty(const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
  if (data.labels.count != data.images.count) throw Error(ErrorCode::DimensionMismatch, "image/label count mismatch");
}

}  // namespace

FloatModel train_from(FloatModel model, const Dataset& data, const TrainConfig& cfg,
                      const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  require_nonempty(data);
  model.validate();
  if (!(model.input_shape == Shape{1, data.images.rows, data.images.cols}))
    throw Error(ErrorCode::ShapeMismatch, "model input shape does not match the dataset");

  FloatModel grad = model;
  Network net(model);
  std::vector<std::uint32_t> order(data.size());
  std::iota(order.begin(), order.end(), 0u);

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, {0x5eed, epoch}));
    // Fisher-Yates with our own index draw keeps the order identical across
    // standard library implementations.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double loss_sum = 0;
    std::size_t loss_n = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      zero(grad);
      for (std::size_t k = start; k < end; ++k) {
        const std::uint32_t idx = order[k];
        loss_sum += net.accumulate(data.images.image(idx), data.labels.labels[idx], grad);
        ++loss_n;
      }
      const float step = static_cast<float>(cfg.learning_rate / static_cast<double>(end - start));
      for (std::size_t li = 0; li < model.layers.size(); ++li) {
        auto& w = model.layers[li].weights;
        auto& b = model.layers[li].biases;
        const auto& gw = grad.layers[li].weights;
        const auto& gb = grad.layers[li].biases;
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gw[i];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= step * gb[i];
      }
    }
    if (on_epoch) on_epoch({epoch + 1, loss_sum / static_cast<double>(loss_n)});
  }
  if (cfg.fit_output_range) scale_last_layer(model, std::ldexp(1.0, -output_range_shift(model, data)));
  model.validate();
  return model;
}

FloatModel train(const Dataset& data, const TrainConfig& cfg, const std::function<void(const EpochStats&)>& on_epoch) {
  return train_from(init_lenet(cfg.seed), data, cfg, on_epoch);
}

int output_range_shift(const FloatModel& model, const Dataset& data, const QFormat& fmt, std::size_t samples) {
  require_nonempty(data);
  Network net(model);
  const std::size_t n = std::min(samples, data.size());
  std::vector<double> peaks;
  peaks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& logits = net.forward(data.images.image(i));
    double peak = 0;
    for (float z : logits) peak = std::max(peak, std::fabs(static_cast<double>(z)));
    peaks.push_back(peak);
  }
  const std::size_t q = std::min(n - 1, static_cast<std::size_t>(0.99 * static_cast<double>(n)));
  std::nth_element(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(q), peaks.end());
  const double limit = fmt.max_value() / 2;
  int k = 0;
  while (k < 16 && std::ldexp(peaks[q], -k) > limit) ++k;
  return k;
}

void scale_last_layer(FloatModel& model, double factor) {
  if (model.layers.empty()) return;
  auto& l = model.layers.back();
  for (auto& w : l.weights) w = static_cast<float>(w * factor);
  for (auto& b : l.biases) b = static_cast<float>(b * factor);
}

std::vector<float> float_logits(const FloatModel& model, std::span<const std::uint8_t> image) {
  if (image.size() != model.input_shape.size()) throw Error(ErrorCode::ShapeMismatch, "image size mismatch");
  Network net(model);
  return net.forward(image);
}

double mean_loss(const FloatModel& model, const Dataset& data) {
  require_nonempty(data);
  Network net(model);
  double sum = 0;
  std::vector<float> d(10);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& logits = net.forward(data.images.image(i));
    d.resize(logits.size());
    sum += nn::softmax_xent(logits.data(), logits.size(), data.labels.labels[i], d.data());
  }
  return sum / static_cast<double>(data.size());
}

QuantizedModel quantize_model(const FloatModel& model, const QFormat& fmt) {
  fmt.validate();
  model.validate();
  QuantizedModel q;
  q.input_shape = model.input_shape;
  std::vector<LayerKind> kinds;
  for (const auto& l : model.layers) {
    QLayer ql;
    ql.kind = l.kind;
    ql.dims = l.dims;
    ql.fmt = fmt;
    for (float w : l.weights) ql.weights.push_back(static_cast<std::int32_t>(quantize_raw(w, fmt)));
    for (float b : l.biases) ql.biases.push_back(static_cast<std::int32_t>(quantize_raw(b, fmt)));
    kinds.push_back(l.kind);
    q.layers.push_back(std::move(ql));
  }
  const auto acts = positional_activations(kinds);
  for (std::size_t i = 0; i < q.layers.size(); ++i) q.layers[i].activation = acts[i];
  q.validate();
  return q;
}

double evaluate(const FloatModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  Network net(model);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& logits = net.forward(data.images.image(i));
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();  // first max
    correct += static_cast<std::size_t>(best) == data.labels.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<int> predict_all(const QuantizedModel& model, const Dataset& data) {
  Accelerator acc(model);
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(acc.infer(data.images.image(i)).prediction);
  return out;
}

double evaluate(const QuantizedModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const auto preds = predict_all(model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == data.labels.labels[i];
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace glitchsim
