#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "strokenet/rng.hpp"
#include "strokenet/tensor.hpp"

namespace strokenet {

struct Linear {
  ad::Tensor w;  // (in x out)
  ad::Tensor b;  // (out)
};

// Pointwise multi-layer perceptron over row vectors, ReLU between layers and
// optionally after the last one.
struct Mlp {
  std::vector<Linear> layers;
  bool relu_last = true;

  ad::Tensor apply(ad::Graph& g, const ad::Tensor& x) const;
  std::size_t out_width() const { return layers.back().w.cols(); }
};

struct Conv1dParams {
  ad::Tensor kernel;  // (C_out x C_in x K)
  ad::Tensor bias;    // (C_out)
};

// Creates named parameter tensors in a fixed order from one seeded stream.
// Weights and biases draw uniform(-sqrt(1/fan_in), sqrt(1/fan_in)); constants
// take an explicit value.
class ParamRegistry {
 public:
  explicit ParamRegistry(std::uint64_t seed) : rng_(seed) {}

  ad::Tensor uniform(const std::string& name, std::vector<std::size_t> shape,
                     std::size_t fan_in);
  ad::Tensor constant(const std::string& name, std::vector<std::size_t> shape, double value);

  Linear linear(const std::string& name, std::size_t in, std::size_t out);
  Mlp mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& widths,
          bool relu_last);
  Conv1dParams conv1d(const std::string& name, std::size_t c_in, std::size_t c_out,
                      std::size_t kernel_width);
  ad::LstmParams lstm(const std::string& name, std::size_t c_in, std::size_t hidden);

  const std::vector<std::pair<std::string, ad::Tensor>>& entries() const { return entries_; }
  std::vector<ad::Tensor> tensors() const;

 private:
  Rng rng_;
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
};

}  // namespace strokenet
