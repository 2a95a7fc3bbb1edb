#include "glitchsim/model.hpp"

#include <string>

#include "glitchsim/errors.hpp"

namespace glitchsim {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Pool: return "pool";
    case LayerKind::Fc: return "fc";
  }
  return "?";
}

std::size_t weight_count(LayerKind kind, const LayerDims& d) {
  switch (kind) {
    case LayerKind::Conv: return std::size_t{d[0]} * d[1] * d[2] * d[3];
    case LayerKind::Pool: return 0;
    case LayerKind::Fc: return std::size_t{d[0]} * d[1];
  }
  return 0;
}

std::size_t bias_count(LayerKind kind, const LayerDims& d) { return kind == LayerKind::Pool ? 0 : d[0]; }

Shape output_shape(LayerKind kind, const LayerDims& d, const Shape& in) {
  auto fail = [&](const std::string& why) -> Shape {
    throw Error(ErrorCode::ShapeMismatch, std::string(to_string(kind)) + " layer: " + why);
  };
  switch (kind) {
    case LayerKind::Conv:
      if (d[1] != in.channels) return fail("input channels " + std::to_string(in.channels) + " != " + std::to_string(d[1]));
      if (d[0] == 0 || d[2] == 0 || d[3] == 0 || d[2] > in.height || d[3] > in.width) return fail("bad kernel dims");
      return {d[0], in.height - d[2] + 1, in.width - d[3] + 1};
    case LayerKind::Pool:
      if (d[0] == 0 || d[1] == 0 || d[2] == 0 || d[3] == 0) return fail("zero window or stride");
      if (d[0] > in.height || d[1] > in.width || (in.height - d[0]) % d[2] != 0 || (in.width - d[1]) % d[3] != 0)
        return fail("window does not tile the input");
      return {in.channels, (in.height - d[0]) / d[2] + 1, (in.width - d[1]) / d[3] + 1};
    case LayerKind::Fc:
      if (d[1] != in.size()) return fail("in_features " + std::to_string(d[1]) + " != " + std::to_string(in.size()));
      if (d[0] == 0 || d[2] != 1 || d[3] != 1) return fail("bad fc dims");
      return {d[0], 1, 1};
  }
  return fail("unknown kind");
}

std::vector<Activation> positional_activations(const std::vector<LayerKind>& kinds) {
  std::vector<Activation> acts(kinds.size(), Activation::None);
  std::size_t last_dsp = kinds.size();
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] != LayerKind::Pool) last_dsp = i;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] != LayerKind::Pool && i != last_dsp) acts[i] = Activation::Tanh;
  return acts;
}

std::vector<std::string> layer_names(const std::vector<LayerKind>& kinds) {
  int conv = 0, pool = 0, fc = 0;
  std::vector<std::string> names;
  for (LayerKind k : kinds) {
    switch (k) {
      case LayerKind::Conv: names.push_back("conv" + std::to_string(++conv)); break;
      case LayerKind::Pool: names.push_back("pool" + std::to_string(++pool)); break;
      case LayerKind::Fc: names.push_back("fc" + std::to_string(++fc)); break;
    }
  }
  return names;
}

std::vector<LayerKind> QuantizedModel::kinds() const {
  std::vector<LayerKind> out;
  for (const auto& l : layers) out.push_back(l.kind);
  return out;
}

std::vector<std::string> QuantizedModel::names() const { return layer_names(kinds()); }

std::vector<Shape> QuantizedModel::shapes() const {
  std::vector<Shape> s{input_shape};
  for (const auto& l : layers) s.push_back(output_shape(l.kind, l.dims, s.back()));
  return s;
}

void QuantizedModel::validate() const {
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  shapes();
  const auto acts = positional_activations(kinds());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const QLayer& l = layers[i];
    l.fmt.validate();
    if (l.fmt.total_bits > 16) throw Error(ErrorCode::InvalidArgument, "layer formats wider than 16 bits are unsupported");
    if (l.weights.size() != weight_count(l.kind, l.dims) || l.biases.size() != bias_count(l.kind, l.dims))
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " parameter count does not match dims");
    for (auto w : l.weights)
      if (w < l.fmt.min_raw() || w > l.fmt.max_raw())
        throw Error(ErrorCode::ValueOutOfRange, "layer " + std::to_string(i) + " weight outside its format");
    for (auto b : l.biases)
      if (b < l.fmt.min_raw() || b > l.fmt.max_raw())
        throw Error(ErrorCode::ValueOutOfRange, "layer " + std::to_string(i) + " bias outside its format");
    if (l.activation != acts[i]) throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " has a non-positional activation");
    if (i > 0 && !(l.fmt == layers[0].fmt)) throw Error(ErrorCode::InvalidArgument, "all layers must share one format");
  }
}

std::vector<std::pair<LayerKind, LayerDims>> lenet_topology() {
  return {
      {LayerKind::Conv, {6, 1, 5, 5}},
      {LayerKind::Pool, {2, 2, 2, 2}},
      {LayerKind::Conv, {16, 6, 5, 5}},
      {LayerKind::Fc, {120, 1024, 1, 1}},
      {LayerKind::Fc, {10, 120, 1, 1}},
  };
}

}  // namespace glitchsim
