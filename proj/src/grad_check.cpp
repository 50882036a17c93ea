#include "strokenet/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet::ad {

double grad_check(const ScalarFn& f, std::vector<Tensor> leaves, double h) {
  // Analytic pass.
  for (Tensor& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Graph g(true);
    Tensor loss = f(g);
    if (loss.size() != 1) throw ShapeError("grad_check: f must return a scalar");
    g.backward(loss);
    for (Tensor& leaf : leaves) analytic.push_back(leaf.grad());
  }

  // Numeric pass, one coordinate at a time.
  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor& leaf = leaves[li];
    leaf.set_requires_grad(false);
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.value()[i];
      leaf.value()[i] = saved + h;
      double fp;
      {
        Graph g(false);
        fp = f(g).item();
      }
      leaf.value()[i] = saved - h;
      double fm;
      {
        Graph g(false);
        fm = f(g).item();
      }
      leaf.value()[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double err =
          std::abs(analytic[li][i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
    leaf.set_requires_grad(true);
  }
  return worst;
}

}  // namespace strokenet::ad
