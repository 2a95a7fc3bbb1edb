#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glitchsim/fxp.hpp"

namespace glitchsim {

enum class LayerKind : std::uint8_t { Conv = 0, Pool = 1, Fc = 2 };
enum class Activation : std::uint8_t { None = 0, Tanh = 1 };

const char* to_string(LayerKind kind);

/// Channel-major tensor shape.
struct Shape {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t size() const { return std::size_t{channels} * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline constexpr Shape kMnistShape{1, 28, 28};

// Layer dims, four per layer:
//   Conv: out_channels, in_channels, kernel_h, kernel_w
//   Pool: window_h, window_w, stride_h, stride_w
//   Fc:   out_features, in_features, 1, 1
using LayerDims = std::array<std::uint32_t, 4>;

std::size_t weight_count(LayerKind kind, const LayerDims& dims);
std::size_t bias_count(LayerKind kind, const LayerDims& dims);
/// Throws ShapeMismatch if the layer cannot consume `in`.
Shape output_shape(LayerKind kind, const LayerDims& dims, const Shape& in);

/// Activation implied by position: every conv/fc layer except the final one
/// is followed by tanh; pooling and the score layer are linear.
std::vector<Activation> positional_activations(const std::vector<LayerKind>& kinds);

/// Conventional names ("conv1", "pool1", "fc2", ...) numbered per kind.
std::vector<std::string> layer_names(const std::vector<LayerKind>& kinds);

struct QLayer {
  LayerKind kind = LayerKind::Conv;
  LayerDims dims{};
  QFormat fmt{};
  std::vector<std::int32_t> weights;  // raw codes in fmt
  std::vector<std::int32_t> biases;   // raw codes in fmt
  Activation activation = Activation::None;

  friend bool operator==(const QLayer&, const QLayer&) = default;
};

struct QuantizedModel {
  std::vector<QLayer> layers;
  Shape input_shape = kMnistShape;

  std::vector<LayerKind> kinds() const;
  std::vector<std::string> names() const;
  /// Shapes after every layer; element 0 is the input shape.
  std::vector<Shape> shapes() const;
  /// Throws ShapeMismatch / ValueOutOfRange / InvalidArgument on a malformed
  /// layer graph.
  void validate() const;

  friend bool operator==(const QuantizedModel&, const QuantizedModel&) = default;
};

/// The five-stage victim topology: Conv1(6@5x5) -> Pool(2x2) -> Conv2(16@5x5)
/// -> FC1(1024->120) -> FC2(120->10).
std::vector<std::pair<LayerKind, LayerDims>> lenet_topology();

}  // namespace glitchsim
