#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imars/config.hpp"

namespace imars {

enum class OutputActivation : std::uint8_t { Relu, Logistic, None };

struct DnnLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

// Fully connected stack executed on crossbar tiles. Hidden layers apply
// a rectifier; the output activation is configurable (logistic for the
// CTR head).
class DnnModel {
 public:
  DnnModel() = default;
  DnnModel(std::vector<DnnLayer> layers, OutputActivation out_act);

  static DnnModel random(std::span<const std::size_t> widths, std::uint64_t seed,
                         OutputActivation out_act);
  static DnnModel identity(std::size_t width, std::size_t depth = 1);

  const std::vector<DnnLayer>& layers() const { return layers_; }
  OutputActivation output_activation() const { return out_act_; }
  std::size_t input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_width() const { return layers_.empty() ? 0 : layers_.back().out; }

  // Functional forward pass; throws ValidationError on width mismatch.
  std::vector<double> forward(std::span<const double> input) const;

 private:
  std::vector<DnnLayer> layers_;
  OutputActivation out_act_ = OutputActivation::Relu;
};

// Crossbar tiles needed to cover an in x out weight matrix.
std::size_t crossbar_tiles(std::size_t in, std::size_t out, const CostTable& fom);

}  // namespace imars
