#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace strokenet::ad {

// Dense 64-bit tensor handle with an optional gradient buffer. Copies share
// the payload, so a parameter tensor held by the model and by an optimizer
// step sees one value and one accumulated gradient.
class Tensor {
 public:
  struct Payload {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until touched; same length as value once allocated
    bool requires_grad = false;
  };

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return p_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return p_->shape; }
  std::size_t size() const { return p_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::vector<double>& value() { return p_->value; }
  const std::vector<double>& value() const { return p_->value; }

  bool requires_grad() const { return p_->requires_grad; }
  void set_requires_grad(bool b) { p_->requires_grad = b; }

  // Allocates a zeroed gradient buffer on first use.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  bool has_grad() const { return !p_->grad.empty(); }
  void zero_grad();

  double item() const;                       // value of a one-element tensor
  double at(std::size_t r, std::size_t c) const;  // 2-D read access

  bool same_payload(const Tensor& o) const { return p_ == o.p_; }
  Payload* payload() const { return p_.get(); }

 private:
  std::shared_ptr<Payload> p_;
};

struct LstmParams {
  Tensor w_ih;  // (4H x C_in), gate rows ordered [input, forget, cell, output]
  Tensor w_hh;  // (4H x H)
  Tensor bias;  // (4H)
  std::size_t hidden() const { return w_hh.cols(); }
};

// Records forward operations and replays their adjoints in reverse. One graph
// per document per step; single-threaded during record and backward.
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return recording_; }

  // --- primitives ------------------------------------------------------
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);  // broadcasts bias rows and scalars
  Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same broadcast rules
  Tensor scale(const Tensor& a, double c);
  Tensor relu(const Tensor& a);
  Tensor softmax(const Tensor& a, int axis);
  Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                    double eps = 1e-5);
  Tensor conv1d(const Tensor& seq, const Tensor& kernel, const Tensor& bias);
  Tensor lstm_sequence(const Tensor& seq, const LstmParams& p);
  std::pair<Tensor, Tensor> lstm_step(const Tensor& x, const Tensor& h_prev,
                                      const Tensor& c_prev, const LstmParams& p);
  Tensor max_over_segments(const Tensor& feats, const std::vector<std::size_t>& segment_of,
                           std::size_t num_segments);
  Tensor gather(const Tensor& feats, const std::vector<std::size_t>& indices);
  Tensor concat(const std::vector<Tensor>& parts, int axis);
  Tensor masked_fill(const Tensor& a, const std::vector<std::uint8_t>& mask, double fill);
  Tensor transpose(const Tensor& a);
  Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
  Tensor sum(const Tensor& a);
  // Weighted mean of per-sample cross entropies: sum_i w_i ce_i / sum_i w_i.
  Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                               const std::vector<double>& sample_weights);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded adjoint once, in
  // reverse order. Gradients accumulate additively into requires_grad leaves.
  void backward(const Tensor& loss);

  std::size_t op_count() const { return tape_.size(); }

 private:
  bool recording_;
  std::vector<std::function<void()>> tape_;

  bool track(std::initializer_list<const Tensor*> inputs) const;
  void push(std::function<void()> fn) { tape_.push_back(std::move(fn)); }
};

}  // namespace strokenet::ad
