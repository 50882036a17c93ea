#pragma once

#include <cstdint>
#include <vector>

#include "strokenet/tensor.hpp"

namespace strokenet::ad {

// Adam with bias correction. Moment buffers are parallel to the parameter
// list handed to init(); the list order must stay stable across steps.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const std::vector<Tensor>& params);
};

// One update from the gradients currently held by `params`. Gradients are
// left untouched; callers zero them between accumulation windows.
void adam_step(AdamState& state, std::vector<Tensor>& params);

// lr_min + 0.5 (lr0 - lr_min) (1 + cos(pi t / T)); t past T clamps to lr_min.
double cosine_lr(std::int64_t step, std::int64_t total, double lr0, double lr_min);

}  // namespace strokenet::ad
