#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "glitchsim/dataio.hpp"
#include "glitchsim/fxp.hpp"
#include "glitchsim/model.hpp"

namespace glitchsim {

struct FloatLayer {
  LayerKind kind = LayerKind::Conv;
  LayerDims dims{};
  std::vector<float> weights;
  std::vector<float> biases;

  friend bool operator==(const FloatLayer&, const FloatLayer&) = default;
};

struct FloatModel {
  std::vector<FloatLayer> layers;
  Shape input_shape = kMnistShape;

  std::vector<Shape> shapes() const;
  /// Throws ShapeMismatch on inconsistent dims and InvalidArgument on
  /// non-finite parameters.
  void validate() const;

  friend bool operator==(const FloatModel&, const FloatModel&) = default;
};

/// Zero-initialized model with the given topology.
FloatModel make_float_model(const std::vector<std::pair<LayerKind, LayerDims>>& topology, Shape input = kMnistShape);

/// LeNet topology with Glorot-uniform weights and zero biases.
FloatModel init_lenet(std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.05;
  std::uint32_t batch_size = 16;
  std::uint32_t epochs = 3;
  std::uint64_t seed = 1;
  /// After training, scale the last layer down by a power of two so that
  /// the logits fit the quantized format (see fit_output_range).
  bool fit_output_range = true;

  void validate() const;
};

struct EpochStats {
  std::uint32_t epoch = 0;
  double mean_loss = 0.0;  // running mean over the epoch's minibatches
};

/// Plain minibatch SGD on softmax cross-entropy. Deterministic given
/// cfg.seed. `on_epoch` (optional) is called after every epoch.
FloatModel train(const Dataset& data, const TrainConfig& cfg,
                 const std::function<void(const EpochStats&)>& on_epoch = {});

/// Same as train() but continuing from an existing model.
FloatModel train_from(FloatModel model, const Dataset& data, const TrainConfig& cfg,
                      const std::function<void(const EpochStats&)>& on_epoch = {});

/// Power-of-two exponent k such that, on the first `samples` images of
/// data, at least 99% of the largest logits scaled by 2^-k stay below half
/// the format's maximum. Positive scaling of the last layer leaves every
/// argmax unchanged, so the float model's accuracy is unaffected.
int output_range_shift(const FloatModel& model, const Dataset& data, const QFormat& fmt = kQ3_5,
                       std::size_t samples = 2000);
void scale_last_layer(FloatModel& model, double factor);

/// Logits of the float network for one image (pixels scaled by 1/256).
std::vector<float> float_logits(const FloatModel& model, std::span<const std::uint8_t> image);

double mean_loss(const FloatModel& model, const Dataset& data);

QuantizedModel quantize_model(const FloatModel& model, const QFormat& fmt = kQ3_5);

/// Fraction of argmax-correct predictions; ties go to the lowest class.
double evaluate(const FloatModel& model, const Dataset& data);
double evaluate(const QuantizedModel& model, const Dataset& data);

/// Per-image predictions of the quantized model.
std::vector<int> predict_all(const QuantizedModel& model, const Dataset& data);

}  // namespace glitchsim
