#include "imars/dnn.hpp"

#include <cmath>
#include <random>

#include "imars/errors.hpp"

namespace imars {

DnnModel::DnnModel(std::vector<DnnLayer> layers, OutputActivation out_act)
    : layers_(std::move(layers)), out_act_(out_act) {
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    if (layers_[i].out != layers_[i + 1].in) {
      throw ValidationError("DNN layer widths do not chain");
    }
  }
}

DnnModel DnnModel::random(std::span<const std::size_t> widths, std::uint64_t seed,
                          OutputActivation out_act) {
  if (widths.size() < 2) throw ValidationError("DNN needs at least input and output widths");
  std::mt19937_64 rng(seed);
  std::vector<DnnLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DnnLayer layer;
    layer.in = widths[i];
    layer.out = widths[i + 1];
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(layer.in)));
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = gauss(rng);
    layer.bias.assign(layer.out, 0.0);
    for (auto& b : layer.bias) b = 0.1 * gauss(rng);
    layers.push_back(std::move(layer));
  }
  return DnnModel(std::move(layers), out_act);
}

DnnModel DnnModel::identity(std::size_t width, std::size_t depth) {
  std::vector<DnnLayer> layers;
  for (std::size_t d = 0; d < depth; ++d) {
    DnnLayer layer;
    layer.in = width;
    layer.out = width;
    layer.weights.assign(width * width, 0.0);
    for (std::size_t i = 0; i < width; ++i) layer.weights[i * width + i] = 1.0;
    layer.bias.assign(width, 0.0);
    layers.push_back(std::move(layer));
  }
  return DnnModel(std::move(layers), OutputActivation::Relu);
}

std::vector<double> DnnModel::forward(std::span<const double> input) const {
  if (input.size() != input_width()) {
    throw ValidationError("DNN input width " + std::to_string(input.size()) + " != " +
                          std::to_string(input_width()));
  }
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const DnnLayer& layer = layers_[li];
    std::vector<double> y(layer.out, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double acc = layer.bias[o];
      const double* w = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
    const bool last = li + 1 == layers_.size();
    if (!last || out_act_ == OutputActivation::Relu) {
      for (auto& v : y) v = std::max(v, 0.0);
    } else if (out_act_ == OutputActivation::Logistic) {
      for (auto& v : y) v = 1.0 / (1.0 + std::exp(-v));
    }
    x = std::move(y);
  }
  return x;
}

std::size_t crossbar_tiles(std::size_t in, std::size_t out, const CostTable& fom) {
  const std::size_t r = (in + fom.crossbar_rows - 1) / fom.crossbar_rows;
  const std::size_t c = (out + fom.crossbar_cols - 1) / fom.crossbar_cols;
  return r * c;
}

}  // namespace imars
