#include "strokenet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet::ad {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

[[noreturn]] void shape_error(const char* op, const std::vector<std::size_t>& a,
                              const std::vector<std::size_t>& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

[[noreturn]] void shape_error(const char* op, const std::vector<std::size_t>& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " + shape_str(a));
}

std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  Tensor t;
  t.p_ = std::make_shared<Payload>();
  t.p_->shape = std::move(shape);
  t.p_->value.assign(numel(t.p_->shape), 0.0);
  t.p_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
  if (numel(shape) != data.size())
    throw ShapeError("Tensor::from_data: " + shape_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " elements");
  Tensor t;
  t.p_ = std::make_shared<Payload>();
  t.p_->shape = std::move(shape);
  t.p_->value = std::move(data);
  t.p_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_data({1}, {v}, requires_grad);
}

std::size_t Tensor::rows() const {
  if (p_->shape.size() != 2) shape_error("rows", p_->shape);
  return p_->shape[0];
}

std::size_t Tensor::cols() const {
  if (p_->shape.size() != 2) shape_error("cols", p_->shape);
  return p_->shape[1];
}

std::vector<double>& Tensor::grad() {
  if (p_->grad.empty()) p_->grad.assign(p_->value.size(), 0.0);
  return p_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (p_->grad.empty()) p_->grad.assign(p_->value.size(), 0.0);
  return p_->grad;
}

void Tensor::zero_grad() {
  if (!p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) shape_error("item", p_->shape);
  return p_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return p_->value[r * cols() + c];
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

bool Graph::track(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
    shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const double* av = a.value().data();
    const double* bv = b.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = av[i * k + kk];
        if (aik == 0.0) continue;
        const double* brow = bv + kk * n;
        double* orow = ov + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
      }
    }
  }
  if (track({&a, &b})) {
    out.set_requires_grad(true);
    push([a = a, b = b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* og = out.grad().data();
      if (a.requires_grad()) {
        double* ag = a.grad().data();
        const double* bv = b.value().data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double* orow = og + i * n;
            const double* brow = bv + kk * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += orow[j] * brow[j];
            ag[i * k + kk] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        double* bg = b.grad().data();
        const double* av = a.value().data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = av[i * k + kk];
            if (aik == 0.0) continue;
            const double* orow = og + i * n;
            double* brow = bg + kk * n;
            for (std::size_t j = 0; j < n; ++j) brow[j] += aik * orow[j];
          }
        }
      }
    });
  }
  return out;
}

namespace {

enum class Broadcast { Same, RowVector, Scalar };

// Returns how `small` broadcasts against `big`, assuming callers already
// oriented the pair. Throws if no rule applies.
Broadcast broadcast_mode(const char* op, const Tensor& big, const Tensor& small) {
  if (big.shape() == small.shape()) return Broadcast::Same;
  if (small.size() == 1) return Broadcast::Scalar;
  if (big.shape().size() == 2 && small.shape().size() == 1 &&
      small.shape()[0] == big.shape()[1])
    return Broadcast::RowVector;
  shape_error(op, big.shape(), small.shape());
}

}  // namespace

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  const bool swap = a.size() < b.size();
  const Tensor& big = swap ? b : a;
  const Tensor& small = swap ? a : b;
  const Broadcast mode = broadcast_mode("add", big, small);

  Tensor out = Tensor::zeros(big.shape());
  const std::size_t n = big.size();
  const std::size_t cols = mode == Broadcast::RowVector ? big.shape()[1] : 0;
  {
    const double* bv = big.value().data();
    const double* sv = small.value().data();
    double* ov = out.value().data();
    switch (mode) {
      case Broadcast::Same:
        for (std::size_t i = 0; i < n; ++i) ov[i] = bv[i] + sv[i];
        break;
      case Broadcast::Scalar:
        for (std::size_t i = 0; i < n; ++i) ov[i] = bv[i] + sv[0];
        break;
      case Broadcast::RowVector:
        for (std::size_t i = 0; i < n; ++i) ov[i] = bv[i] + sv[i % cols];
        break;
    }
  }
  if (track({&a, &b})) {
    out.set_requires_grad(true);
    Tensor bigc = big, smallc = small;
    push([bigc, smallc, out, mode, n, cols]() mutable {
      if (!out.has_grad()) return;
      const double* og = out.grad().data();
      if (bigc.requires_grad()) {
        double* g = bigc.grad().data();
        for (std::size_t i = 0; i < n; ++i) g[i] += og[i];
      }
      if (smallc.requires_grad()) {
        double* g = smallc.grad().data();
        switch (mode) {
          case Broadcast::Same:
            for (std::size_t i = 0; i < n; ++i) g[i] += og[i];
            break;
          case Broadcast::Scalar:
            for (std::size_t i = 0; i < n; ++i) g[0] += og[i];
            break;
          case Broadcast::RowVector:
            for (std::size_t i = 0; i < n; ++i) g[i % cols] += og[i];
            break;
        }
      }
    });
  }
  return out;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  const bool swap = a.size() < b.size();
  const Tensor& big = swap ? b : a;
  const Tensor& small = swap ? a : b;
  const Broadcast mode = broadcast_mode("mul", big, small);

  Tensor out = Tensor::zeros(big.shape());
  const std::size_t n = big.size();
  const std::size_t cols = mode == Broadcast::RowVector ? big.shape()[1] : 0;
  {
    const double* bv = big.value().data();
    const double* sv = small.value().data();
    double* ov = out.value().data();
    switch (mode) {
      case Broadcast::Same:
        for (std::size_t i = 0; i < n; ++i) ov[i] = bv[i] * sv[i];
        break;
      case Broadcast::Scalar:
        for (std::size_t i = 0; i < n; ++i) ov[i] = bv[i] * sv[0];
        break;
      case Broadcast::RowVector:
        for (std::size_t i = 0; i < n; ++i) ov[i] = bv[i] * sv[i % cols];
        break;
    }
  }
  if (track({&a, &b})) {
    out.set_requires_grad(true);
    Tensor bigc = big, smallc = small;
    push([bigc, smallc, out, mode, n, cols]() mutable {
      if (!out.has_grad()) return;
      const double* og = out.grad().data();
      const double* bv = bigc.value().data();
      const double* sv = smallc.value().data();
      if (bigc.requires_grad()) {
        double* g = bigc.grad().data();
        switch (mode) {
          case Broadcast::Same:
            for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * sv[i];
            break;
          case Broadcast::Scalar:
            for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * sv[0];
            break;
          case Broadcast::RowVector:
            for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * sv[i % cols];
            break;
        }
      }
      if (smallc.requires_grad()) {
        double* g = smallc.grad().data();
        switch (mode) {
          case Broadcast::Same:
            for (std::size_t i = 0; i < n; ++i) g[i] += og[i] * bv[i];
            break;
          case Broadcast::Scalar:
            for (std::size_t i = 0; i < n; ++i) g[0] += og[i] * bv[i];
            break;
          case Broadcast::RowVector:
            for (std::size_t i = 0; i < n; ++i) g[i % cols] += og[i] * bv[i];
            break;
        }
      }
    });
  }
  return out;
}

Tensor Graph::scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.value()[i] = a.value()[i] * c;
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out, c]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& og = out.grad();
      auto& ag = a.grad();
      for (std::size_t i = 0; i < og.size(); ++i) ag[i] += c * og[i];
    });
  }
  return out;
}

Tensor Graph::relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = a.value()[i];
    out.value()[i] = v > 0.0 ? v : 0.0;
  }
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& og = out.grad();
      const auto& av = a.value();
      auto& ag = a.grad();
      for (std::size_t i = 0; i < og.size(); ++i) {
        if (av[i] > 0.0) ag[i] += og[i];
      }
    });
  }
  return out;
}

Tensor Graph::softmax(const Tensor& a, int axis) {
  std::size_t groups, len, gstride, estride;
  if (a.shape().size() == 1) {
    if (axis != 0) shape_error("softmax", a.shape());
    groups = 1, len = a.shape()[0], gstride = 0, estride = 1;
  } else if (a.shape().size() == 2) {
    const std::size_t r = a.rows(), c = a.cols();
    if (axis == 1 || axis == -1) {
      groups = r, len = c, gstride = c, estride = 1;
    } else if (axis == 0) {
      groups = c, len = r, gstride = 1, estride = c;
    } else {
      shape_error("softmax", a.shape());
    }
  } else {
    shape_error("softmax", a.shape());
  }

  Tensor out = Tensor::zeros(a.shape());
  {
    const double* av = a.value().data();
    double* ov = out.value().data();
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t base = g * gstride;
      double mx = av[base];
      for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, av[base + i * estride]);
      double denom = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const double e = std::exp(av[base + i * estride] - mx);
        ov[base + i * estride] = e;
        denom += e;
      }
      for (std::size_t i = 0; i < len; ++i) ov[base + i * estride] /= denom;
    }
  }
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out, groups, len, gstride, estride]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const double* og = out.grad().data();
      const double* ov = out.value().data();
      double* ag = a.grad().data();
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = g * gstride;
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t k = base + i * estride;
          dot += og[k] * ov[k];
        }
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t k = base + i * estride;
          ag[k] += ov[k] * (og[k] - dot);
        }
      }
    });
  }
  return out;
}

Tensor Graph::layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                         double eps) {
  std::size_t rows, cols;
  if (x.shape().size() == 2) {
    rows = x.rows(), cols = x.cols();
  } else if (x.shape().size() == 1) {
    rows = 1, cols = x.shape()[0];
  } else {
    shape_error("layer_norm", x.shape());
  }
  if (gain.shape() != std::vector<std::size_t>{cols} || shift.shape() != gain.shape())
    shape_error("layer_norm", x.shape(), gain.shape());

  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> inv_std(rows), mean(rows);
  {
    const double* xv = x.value().data();
    const double* gv = gain.value().data();
    const double* sv = shift.value().data();
    double* ov = out.value().data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = xv + r * cols;
      double mu = 0.0;
      for (std::size_t c = 0; c < cols; ++c) mu += row[c];
      mu /= cols;
      double var = 0.0;
      for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
      var /= cols;
      const double is = 1.0 / std::sqrt(var + eps);
      mean[r] = mu;
      inv_std[r] = is;
      for (std::size_t c = 0; c < cols; ++c)
        ov[r * cols + c] = gv[c] * (row[c] - mu) * is + sv[c];
    }
  }
  if (track({&x, &gain, &shift})) {
    out.set_requires_grad(true);
    Tensor xc = x, gc = gain, sc = shift;
    push([xc, gc, sc, out, rows, cols, mean = std::move(mean),
          inv_std = std::move(inv_std)]() mutable {
      if (!out.has_grad()) return;
      const double* og = out.grad().data();
      const double* xv = xc.value().data();
      const double* gv = gc.value().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double mu = mean[r], is = inv_std[r];
        // dxhat, plus the two row reductions the chain rule needs
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          const double xhat = (xv[r * cols + c] - mu) * is;
          const double dxhat = og[r * cols + c] * gv[c];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
        }
        if (xc.requires_grad()) {
          double* xg = xc.grad().data();
          for (std::size_t c = 0; c < cols; ++c) {
            const double xhat = (xv[r * cols + c] - mu) * is;
            const double dxhat = og[r * cols + c] * gv[c];
            xg[r * cols + c] +=
                is * (dxhat - sum_dxhat / cols - xhat * sum_dxhat_xhat / cols);
          }
        }
        if (gc.requires_grad() || sc.requires_grad()) {
          double* gg = gc.requires_grad() ? gc.grad().data() : nullptr;
          double* sg = sc.requires_grad() ? sc.grad().data() : nullptr;
          for (std::size_t c = 0; c < cols; ++c) {
            const double xhat = (xv[r * cols + c] - mu) * is;
            if (gg) gg[c] += og[r * cols + c] * xhat;
            if (sg) sg[c] += og[r * cols + c];
          }
        }
      }
    });
  }
  return out;
}

Tensor Graph::conv1d(const Tensor& seq, const Tensor& kernel, const Tensor& bias) {
  if (seq.shape().size() != 2 || kernel.shape().size() != 3)
    shape_error("conv1d", seq.shape(), kernel.shape());
  const std::size_t len = seq.shape()[0], cin = seq.shape()[1];
  const std::size_t cout = kernel.shape()[0], kcin = kernel.shape()[1], kw = kernel.shape()[2];
  if (kcin != cin || kw % 2 == 0) shape_error("conv1d", seq.shape(), kernel.shape());
  if (bias.shape() != std::vector<std::size_t>{cout})
    shape_error("conv1d", kernel.shape(), bias.shape());
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kw / 2);

  Tensor out = Tensor::zeros({len, cout});
  {
    const double* xv = seq.value().data();
    const double* wv = kernel.value().data();
    const double* bv = bias.value().data();
    double* ov = out.value().data();
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t o = 0; o < cout; ++o) {
        double acc = bv[o];
        for (std::size_t j = 0; j < kw; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + j - pad;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
          const double* xrow = xv + src * cin;
          const double* wrow = wv + (o * cin) * kw + j;
          for (std::size_t c = 0; c < cin; ++c) acc += xrow[c] * wrow[c * kw];
        }
        ov[t * cout + o] = acc;
      }
    }
  }
  if (track({&seq, &kernel, &bias})) {
    out.set_requires_grad(true);
    Tensor x = seq, w = kernel, b = bias;
    push([x, w, b, out, len, cin, cout, kw, pad]() mutable {
      if (!out.has_grad()) return;
      const double* og = out.grad().data();
      const double* xv = x.value().data();
      const double* wv = w.value().data();
      double* xg = x.requires_grad() ? x.grad().data() : nullptr;
      double* wg = w.requires_grad() ? w.grad().data() : nullptr;
      double* bg = b.requires_grad() ? b.grad().data() : nullptr;
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t o = 0; o < cout; ++o) {
          const double go = og[t * cout + o];
          if (go == 0.0) continue;
          if (bg) bg[o] += go;
          for (std::size_t j = 0; j < kw; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + j - pad;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            for (std::size_t c = 0; c < cin; ++c) {
              const std::size_t widx = (o * cin + c) * kw + j;
              if (xg) xg[src * cin + c] += go * wv[widx];
              if (wg) wg[widx] += go * xv[src * cin + c];
            }
          }
        }
      }
    });
  }
  return out;
}

namespace {

void check_lstm_shapes(const char* op, std::size_t cin, const LstmParams& p) {
  const std::size_t h = p.w_hh.cols();
  if (p.w_ih.shape().size() != 2 || p.w_hh.shape().size() != 2 ||
      p.w_ih.rows() != 4 * h || p.w_ih.cols() != cin || p.w_hh.rows() != 4 * h ||
      p.bias.shape() != std::vector<std::size_t>{4 * h})
    throw ShapeError(std::string(op) + ": inconsistent parameter shapes for input width " +
                     std::to_string(cin));
}

}  // namespace

Tensor Graph::lstm_sequence(const Tensor& seq, const LstmParams& p) {
  if (seq.shape().size() != 2) shape_error("lstm_sequence", seq.shape());
  const std::size_t len = seq.shape()[0], cin = seq.shape()[1];
  check_lstm_shapes("lstm_sequence", cin, p);
  const std::size_t h = p.hidden();

  Tensor out = Tensor::zeros({len, h});
  // Post-activation gates [i, f, g, o] per step, plus cell states and their
  // tanh, cached for the adjoint.
  std::vector<double> gates(len * 4 * h), cell(len * h), tanh_c(len * h);
  {
    const double* xv = seq.value().data();
    const double* wih = p.w_ih.value().data();
    const double* whh = p.w_hh.value().data();
    const double* bv = p.bias.value().data();
    double* hv = out.value().data();
    std::vector<double> act(4 * h);
    for (std::size_t t = 0; t < len; ++t) {
      const double* xt = xv + t * cin;
      const double* hprev = t == 0 ? nullptr : hv + (t - 1) * h;
      for (std::size_t r = 0; r < 4 * h; ++r) {
        double acc = bv[r];
        const double* wr = wih + r * cin;
        for (std::size_t c = 0; c < cin; ++c) acc += wr[c] * xt[c];
        if (hprev) {
          const double* ur = whh + r * h;
          for (std::size_t c = 0; c < h; ++c) acc += ur[c] * hprev[c];
        }
        act[r] = acc;
      }
      double* gt = gates.data() + t * 4 * h;
      for (std::size_t u = 0; u < h; ++u) {
        const double gi = sigmoid(act[u]);
        const double gf = sigmoid(act[h + u]);
        const double gg = std::tanh(act[2 * h + u]);
        const double go = sigmoid(act[3 * h + u]);
        gt[u] = gi;
        gt[h + u] = gf;
        gt[2 * h + u] = gg;
        gt[3 * h + u] = go;
        const double cprev = t == 0 ? 0.0 : cell[(t - 1) * h + u];
        const double ct = gf * cprev + gi * gg;
        cell[t * h + u] = ct;
        const double tc = std::tanh(ct);
        tanh_c[t * h + u] = tc;
        hv[t * h + u] = go * tc;
      }
    }
  }
  if (track({&seq, &p.w_ih, &p.w_hh, &p.bias})) {
    out.set_requires_grad(true);
    Tensor x = seq;
    LstmParams pc = p;
    push([x, pc, out, len, cin, h, gates = std::move(gates), cell = std::move(cell),
          tanh_c = std::move(tanh_c)]() mutable {
      if (!out.has_grad()) return;
      const double* og = out.grad().data();
      const double* hv = out.value().data();
      const double* xv = x.value().data();
      const double* wih = pc.w_ih.value().data();
      const double* whh = pc.w_hh.value().data();
      double* xg = x.requires_grad() ? x.grad().data() : nullptr;
      double* wihg = pc.w_ih.requires_grad() ? pc.w_ih.grad().data() : nullptr;
      double* whhg = pc.w_hh.requires_grad() ? pc.w_hh.grad().data() : nullptr;
      double* bg = pc.bias.requires_grad() ? pc.bias.grad().data() : nullptr;

      std::vector<double> dh(h, 0.0), dc(h, 0.0), da(4 * h);
      for (std::size_t ti = len; ti-- > 0;) {
        const double* gt = gates.data() + ti * 4 * h;
        for (std::size_t u = 0; u < h; ++u) {
          const double gi = gt[u], gf = gt[h + u], gg = gt[2 * h + u], go = gt[3 * h + u];
          const double tc = tanh_c[ti * h + u];
          const double dht = dh[u] + og[ti * h + u];
          const double dct = dc[u] + dht * go * (1.0 - tc * tc);
          const double cprev = ti == 0 ? 0.0 : cell[(ti - 1) * h + u];
          da[u] = dct * gg * gi * (1.0 - gi);                 // input gate
          da[h + u] = dct * cprev * gf * (1.0 - gf);          // forget gate
          da[2 * h + u] = dct * gi * (1.0 - gg * gg);         // cell candidate
          da[3 * h + u] = dht * tc * go * (1.0 - go);         // output gate
          dc[u] = dct * gf;
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        const double* xt = xv + ti * cin;
        const double* hprev = ti == 0 ? nullptr : hv + (ti - 1) * h;
        for (std::size_t r = 0; r < 4 * h; ++r) {
          const double d = da[r];
          if (d == 0.0) continue;
          if (bg) bg[r] += d;
          if (xg) {
            const double* wr = wih + r * cin;
            double* xgr = xg + ti * cin;
            for (std::size_t c = 0; c < cin; ++c) xgr[c] += d * wr[c];
          }
          if (wihg) {
            double* wr = wihg + r * cin;
            for (std::size_t c = 0; c < cin; ++c) wr[c] += d * xt[c];
          }
          if (hprev) {
            const double* ur = whh + r * h;
            for (std::size_t c = 0; c < h; ++c) dh[c] += d * ur[c];
            if (whhg) {
              double* ur_g = whhg + r * h;
              for (std::size_t c = 0; c < h; ++c) ur_g[c] += d * hprev[c];
            }
          }
        }
      }
    });
  }
  return out;
}

std::pair<Tensor, Tensor> Graph::lstm_step(const Tensor& x, const Tensor& h_prev,
                                           const Tensor& c_prev, const LstmParams& p) {
  if (x.shape().size() != 1) shape_error("lstm_step", x.shape());
  const std::size_t cin = x.shape()[0];
  check_lstm_shapes("lstm_step", cin, p);
  const std::size_t h = p.hidden();
  if (h_prev.shape() != std::vector<std::size_t>{h} || c_prev.shape() != h_prev.shape())
    shape_error("lstm_step", h_prev.shape(), c_prev.shape());

  Tensor h_out = Tensor::zeros({h});
  Tensor c_out = Tensor::zeros({h});
  std::vector<double> gates(4 * h), tanh_c(h);
  {
    const double* xv = x.value().data();
    const double* hp = h_prev.value().data();
    const double* cp = c_prev.value().data();
    const double* wih = p.w_ih.value().data();
    const double* whh = p.w_hh.value().data();
    const double* bv = p.bias.value().data();
    std::vector<double> act(4 * h);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      double acc = bv[r];
      const double* wr = wih + r * cin;
      for (std::size_t c = 0; c < cin; ++c) acc += wr[c] * xv[c];
      const double* ur = whh + r * h;
      for (std::size_t c = 0; c < h; ++c) acc += ur[c] * hp[c];
      act[r] = acc;
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double gi = sigmoid(act[u]);
      const double gf = sigmoid(act[h + u]);
      const double gg = std::tanh(act[2 * h + u]);
      const double go = sigmoid(act[3 * h + u]);
      gates[u] = gi;
      gates[h + u] = gf;
      gates[2 * h + u] = gg;
      gates[3 * h + u] = go;
      const double ct = gf * cp[u] + gi * gg;
      c_out.value()[u] = ct;
      tanh_c[u] = std::tanh(ct);
      h_out.value()[u] = go * tanh_c[u];
    }
  }
  if (track({&x, &h_prev, &c_prev, &p.w_ih, &p.w_hh, &p.bias})) {
    h_out.set_requires_grad(true);
    c_out.set_requires_grad(true);
    Tensor xc = x, hpc = h_prev, cpc = c_prev;
    LstmParams pc = p;
    push([xc, hpc, cpc, pc, h_out, c_out, cin, h, gates = std::move(gates),
          tanh_c = std::move(tanh_c)]() mutable {
      const bool has_h = h_out.has_grad(), has_c = c_out.has_grad();
      if (!has_h && !has_c) return;
      const double* hg = has_h ? h_out.grad().data() : nullptr;
      const double* cg = has_c ? c_out.grad().data() : nullptr;
      const double* xv = xc.value().data();
      const double* hp = hpc.value().data();
      const double* cp = cpc.value().data();
      const double* wih = pc.w_ih.value().data();
      const double* whh = pc.w_hh.value().data();
      std::vector<double> da(4 * h);
      std::vector<double> dc_prev(h, 0.0);
      for (std::size_t u = 0; u < h; ++u) {
        const double gi = gates[u], gf = gates[h + u], gg = gates[2 * h + u],
                     go = gates[3 * h + u];
        const double tc = tanh_c[u];
        const double dht = hg ? hg[u] : 0.0;
        double dct = cg ? cg[u] : 0.0;
        dct += dht * go * (1.0 - tc * tc);
        da[u] = dct * gg * gi * (1.0 - gi);
        da[h + u] = dct * cp[u] * gf * (1.0 - gf);
        da[2 * h + u] = dct * gi * (1.0 - gg * gg);
        da[3 * h + u] = dht * tc * go * (1.0 - go);
        dc_prev[u] = dct * gf;
      }
      if (cpc.requires_grad()) {
        double* g = cpc.grad().data();
        for (std::size_t u = 0; u < h; ++u) g[u] += dc_prev[u];
      }
      double* xg = xc.requires_grad() ? xc.grad().data() : nullptr;
      double* hpg = hpc.requires_grad() ? hpc.grad().data() : nullptr;
      double* wihg = pc.w_ih.requires_grad() ? pc.w_ih.grad().data() : nullptr;
      double* whhg = pc.w_hh.requires_grad() ? pc.w_hh.grad().data() : nullptr;
      double* bg = pc.bias.requires_grad() ? pc.bias.grad().data() : nullptr;
      for (std::size_t r = 0; r < 4 * h; ++r) {
        const double d = da[r];
        if (d == 0.0) continue;
        if (bg) bg[r] += d;
        if (xg) {
          const double* wr = wih + r * cin;
          for (std::size_t c = 0; c < cin; ++c) xg[c] += d * wr[c];
        }
        if (wihg) {
          double* wr = wihg + r * cin;
          for (std::size_t c = 0; c < cin; ++c) wr[c] += d * xv[c];
        }
        if (hpg) {
          const double* ur = whh + r * h;
          for (std::size_t c = 0; c < h; ++c) hpg[c] += d * ur[c];
        }
        if (whhg) {
          double* ur = whhg + r * h;
          for (std::size_t c = 0; c < h; ++c) ur[c] += d * hp[c];
        }
      }
    });
  }
  return {h_out, c_out};
}

Tensor Graph::max_over_segments(const Tensor& feats, const std::vector<std::size_t>& segment_of,
                                std::size_t num_segments) {
  if (feats.shape().size() != 2) shape_error("max_over_segments", feats.shape());
  const std::size_t n = feats.rows(), c = feats.cols();
  if (segment_of.size() != n)
    throw ShapeError("max_over_segments: segment map length " +
                     std::to_string(segment_of.size()) + " != rows " + std::to_string(n));

  Tensor out = Tensor::zeros({num_segments, c});
  std::vector<std::size_t> argmax(num_segments * c, n);  // n = unset sentinel
  {
    const double* fv = feats.value().data();
    double* ov = out.value().data();
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t s = segment_of[r];
      if (s >= num_segments)
        throw ShapeError("max_over_segments: segment id " + std::to_string(s) +
                         " out of range");
      for (std::size_t j = 0; j < c; ++j) {
        const double v = fv[r * c + j];
        std::size_t& am = argmax[s * c + j];
        if (am == n || v > ov[s * c + j]) {
          ov[s * c + j] = v;
          am = r;
        }
      }
    }
    for (std::size_t s = 0; s < num_segments; ++s) {
      if (c > 0 && argmax[s * c] == n)
        throw ShapeError("max_over_segments: segment " + std::to_string(s) + " is empty");
    }
  }
  if (track({&feats})) {
    out.set_requires_grad(true);
    Tensor f = feats;
    push([f, out, argmax = std::move(argmax), c]() mutable {
      if (!out.has_grad() || !f.requires_grad()) return;
      const auto& og = out.grad();
      auto& fg = f.grad();
      for (std::size_t k = 0; k < og.size(); ++k) {
        fg[argmax[k] * c + (k % c)] += og[k];
      }
    });
  }
  return out;
}

Tensor Graph::gather(const Tensor& feats, const std::vector<std::size_t>& indices) {
  if (feats.shape().size() != 2) shape_error("gather", feats.shape());
  const std::size_t n = feats.rows(), c = feats.cols();
  Tensor out = Tensor::zeros({indices.size(), c});
  {
    const double* fv = feats.value().data();
    double* ov = out.value().data();
    for (std::size_t r = 0; r < indices.size(); ++r) {
      if (indices[r] >= n)
        throw ShapeError("gather: index " + std::to_string(indices[r]) +
                         " out of range for " + std::to_string(n) + " rows");
      const double* src = fv + indices[r] * c;
      std::copy(src, src + c, ov + r * c);
    }
  }
  if (track({&feats})) {
    out.set_requires_grad(true);
    Tensor f = feats;
    push([f, out, indices, c]() mutable {
      if (!out.has_grad() || !f.requires_grad()) return;
      const auto& og = out.grad();
      auto& fg = f.grad();
      for (std::size_t r = 0; r < indices.size(); ++r) {
        double* dst = fg.data() + indices[r] * c;
        const double* src = og.data() + r * c;
        for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

Tensor Graph::concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rank = parts[0].shape().size();
  if (rank == 1) {
    if (axis != 0) shape_error("concat", parts[0].shape());
    std::size_t total = 0;
    for (const Tensor& t : parts) {
      if (t.shape().size() != 1) shape_error("concat", parts[0].shape(), t.shape());
      total += t.size();
    }
    Tensor out = Tensor::zeros({total});
    std::size_t off = 0;
    for (const Tensor& t : parts) {
      std::copy(t.value().begin(), t.value().end(), out.value().begin() + off);
      off += t.size();
    }
    bool any = false;
    for (const Tensor& t : parts) any = any || t.requires_grad();
    if (recording_ && any) {
      out.set_requires_grad(true);
      push([parts = parts, out]() mutable {
        if (!out.has_grad()) return;
        const auto& og = out.grad();
        std::size_t off = 0;
        for (Tensor& t : parts) {
          if (t.requires_grad()) {
            auto& tg = t.grad();
            for (std::size_t i = 0; i < t.size(); ++i) tg[i] += og[off + i];
          }
          off += t.size();
        }
      });
    }
    return out;
  }
  if (rank != 2 || (axis != 0 && axis != 1)) shape_error("concat", parts[0].shape());

  std::size_t total_rows = 0, total_cols = 0;
  if (axis == 0) {
    total_cols = parts[0].cols();
    for (const Tensor& t : parts) {
      if (t.shape().size() != 2 || t.cols() != total_cols)
        shape_error("concat", parts[0].shape(), t.shape());
      total_rows += t.rows();
    }
  } else {
    total_rows = parts[0].rows();
    for (const Tensor& t : parts) {
      if (t.shape().size() != 2 || t.rows() != total_rows)
        shape_error("concat", parts[0].shape(), t.shape());
      total_cols += t.cols();
    }
  }
  Tensor out = Tensor::zeros({total_rows, total_cols});
  {
    double* ov = out.value().data();
    if (axis == 0) {
      std::size_t row_off = 0;
      for (const Tensor& t : parts) {
        std::copy(t.value().begin(), t.value().end(), ov + row_off * total_cols);
        row_off += t.rows();
      }
    } else {
      std::size_t col_off = 0;
      for (const Tensor& t : parts) {
        const std::size_t c = t.cols();
        for (std::size_t r = 0; r < total_rows; ++r)
          std::copy(t.value().begin() + r * c, t.value().begin() + (r + 1) * c,
                    ov + r * total_cols + col_off);
        col_off += c;
      }
    }
  }
  bool any = false;
  for (const Tensor& t : parts) any = any || t.requires_grad();
  if (recording_ && any) {
    out.set_requires_grad(true);
    push([parts = parts, out, axis, total_cols]() mutable {
      if (!out.has_grad()) return;
      const auto& og = out.grad();
      if (axis == 0) {
        std::size_t row_off = 0;
        for (Tensor& t : parts) {
          if (t.requires_grad()) {
            auto& tg = t.grad();
            const double* src = og.data() + row_off * total_cols;
            for (std::size_t i = 0; i < t.size(); ++i) tg[i] += src[i];
          }
          row_off += t.rows();
        }
      } else {
        std::size_t col_off = 0;
        for (Tensor& t : parts) {
          const std::size_t c = t.cols();
          if (t.requires_grad()) {
            auto& tg = t.grad();
            for (std::size_t r = 0; r < t.rows(); ++r)
              for (std::size_t j = 0; j < c; ++j)
                tg[r * c + j] += og[r * total_cols + col_off + j];
          }
          col_off += c;
        }
      }
    });
  }
  return out;
}

Tensor Graph::masked_fill(const Tensor& a, const std::vector<std::uint8_t>& mask,
                          double fill) {
  if (mask.size() != a.size())
    throw ShapeError("masked_fill: mask length " + std::to_string(mask.size()) +
                     " != tensor size " + std::to_string(a.size()));
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.value()[i] = mask[i] ? fill : a.value()[i];
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out, mask]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& og = out.grad();
      auto& ag = a.grad();
      for (std::size_t i = 0; i < og.size(); ++i) {
        if (!mask[i]) ag[i] += og[i];
      }
    });
  }
  return out;
}

Tensor Graph::transpose(const Tensor& a) {
  if (a.shape().size() != 2) shape_error("transpose", a.shape());
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros({c, r});
  {
    const double* av = a.value().data();
    double* ov = out.value().data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ov[j * r + i] = av[i * c + j];
  }
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out, r, c]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& og = out.grad();
      auto& ag = a.grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ag[i * c + j] += og[j * r + i];
    });
  }
  return out;
}

Tensor Graph::reshape(const Tensor& a, std::vector<std::size_t> shape) {
  Tensor out = Tensor::from_data(std::move(shape), a.value());
  if (out.size() != a.size()) shape_error("reshape", a.shape(), out.shape());
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& og = out.grad();
      auto& ag = a.grad();
      for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i];
    });
  }
  return out;
}

Tensor Graph::sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.value()) acc += v;
  Tensor out = Tensor::scalar(acc);
  if (track({&a})) {
    out.set_requires_grad(true);
    push([a = a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const double g = out.grad()[0];
      auto& ag = a.grad();
      for (std::size_t i = 0; i < ag.size(); ++i) ag[i] += g;
    });
  }
  return out;
}

Tensor Graph::softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                    const std::vector<double>& sample_weights) {
  if (logits.shape().size() != 2) shape_error("softmax_cross_entropy", logits.shape());
  const std::size_t n = logits.rows(), t = logits.cols();
  if (labels.size() != n || sample_weights.size() != n)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(n) + " rows vs " +
                     std::to_string(labels.size()) + " labels and " +
                     std::to_string(sample_weights.size()) + " weights");

  double weight_sum = 0.0;
  for (double w : sample_weights) weight_sum += w;
  if (weight_sum <= 0.0)
    throw ShapeError("softmax_cross_entropy: weights must sum to a positive value");

  std::vector<double> probs(n * t);
  double loss = 0.0;
  {
    const double* lv = logits.value().data();
    for (std::size_t i = 0; i < n; ++i) {
      const int y = labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= t)
        throw ShapeError("softmax_cross_entropy: label " + std::to_string(y) +
                         " out of range for " + std::to_string(t) + " classes");
      const double* row = lv + i * t;
      double mx = row[0];
      for (std::size_t j = 1; j < t; ++j) mx = std::max(mx, row[j]);
      double denom = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        const double e = std::exp(row[j] - mx);
        probs[i * t + j] = e;
        denom += e;
      }
      for (std::size_t j = 0; j < t; ++j) probs[i * t + j] /= denom;
      loss += sample_weights[i] * (std::log(denom) + mx - row[y]);
    }
  }
  Tensor out = Tensor::scalar(loss / weight_sum);
  if (track({&logits})) {
    out.set_requires_grad(true);
    Tensor l = logits;
    push([l, out, labels, sample_weights, weight_sum, probs = std::move(probs), n,
          t]() mutable {
      if (!out.has_grad() || !l.requires_grad()) return;
      const double g = out.grad()[0];
      auto& lg = l.grad();
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = g * sample_weights[i] / weight_sum;
        for (std::size_t j = 0; j < t; ++j) {
          double delta = probs[i * t + j];
          if (static_cast<std::size_t>(labels[i]) == j) delta -= 1.0;
          lg[i * t + j] += wi * delta;
        }
      }
    });
  }
  return out;
}

void Graph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ShapeError("backward: loss must be a scalar tensor");
  if (!recording_) throw Error("backward: graph is not recording");
  loss.payload()->grad.assign(1, 1.0);
  for (std::size_t i = tape_.size(); i-- > 0;) tape_[i]();
  tape_.clear();
}

}  // namespace strokenet::ad
