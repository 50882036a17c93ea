#include "strokenet/nn.hpp"

#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet {

using ad::Tensor;

Tensor Mlp::apply(ad::Graph& g, const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = g.add(g.matmul(h, layers[i].w), layers[i].b);
    if (i + 1 < layers.size() || relu_last) h = g.relu(h);
  }
  return h;
}

Tensor ParamRegistry::uniform(const std::string& name, std::vector<std::size_t> shape,
                              std::size_t fan_in) {
  if (fan_in == 0) throw ConfigError("parameter '" + name + "': fan_in must be >= 1");
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.value()) v = rng_.uniform(-bound, bound);
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamRegistry::constant(const std::string& name, std::vector<std::size_t> shape,
                               double value) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.value()) v = value;
  entries_.emplace_back(name, t);
  return t;
}

Linear ParamRegistry::linear(const std::string& name, std::size_t in, std::size_t out) {
  Linear l;
  l.w = uniform(name + ".w", {in, out}, in);
  l.b = uniform(name + ".b", {out}, in);
  return l;
}

Mlp ParamRegistry::mlp(const std::string& name, std::size_t in,
                       const std::vector<std::size_t>& widths, bool relu_last) {
  if (widths.empty()) throw ConfigError("mlp '" + name + "': no layer widths");
  Mlp m;
  m.relu_last = relu_last;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    m.layers.push_back(linear(name + ".l" + std::to_string(i), prev, widths[i]));
    prev = widths[i];
  }
  return m;
}

Conv1dParams ParamRegistry::conv1d(const std::string& name, std::size_t c_in,
                                   std::size_t c_out, std::size_t kernel_width) {
  Conv1dParams c;
  c.kernel = uniform(name + ".kernel", {c_out, c_in, kernel_width}, c_in * kernel_width);
  c.bias = uniform(name + ".bias", {c_out}, c_in * kernel_width);
  return c;
}

ad::LstmParams ParamRegistry::lstm(const std::string& name, std::size_t c_in,
                                   std::size_t hidden) {
  ad::LstmParams p;
  p.w_ih = uniform(name + ".w_ih", {4 * hidden, c_in}, c_in);
  p.w_hh = uniform(name + ".w_hh", {4 * hidden, hidden}, hidden);
  p.bias = uniform(name + ".bias", {4 * hidden}, hidden);
  return p;
}

std::vector<Tensor> ParamRegistry::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [name, t] : entries_) out.push_back(t);
  return out;
}

}  // namespace strokenet
