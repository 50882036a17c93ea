#pragma once

#include <functional>
#include <vector>

#include "strokenet/tensor.hpp"

namespace strokenet::ad {

// Scalar-valued function of the leaves, evaluated under a fresh graph each
// call. Implementations must read leaf values through the handles so that
// coordinate perturbations are visible.
using ScalarFn = std::function<Tensor(Graph&)>;

// Central-difference check of reverse-mode gradients for every coordinate of
// every leaf: returns max over coordinates of
//   |analytic - numeric| / max(1, |numeric|).
double grad_check(const ScalarFn& f, std::vector<Tensor> leaves, double h = 1e-5);

}  // namespace strokenet::ad
