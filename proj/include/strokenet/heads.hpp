#pragma once

#include <vector>

#include "strokenet/isa.hpp"
#include "strokenet/nn.hpp"
#include "strokenet/tensor.hpp"

namespace strokenet {

struct LossConfig {
  double aux_weight = 1.0;        // mixing coefficient for the transition term
  double weight_same = 1.0;       // class weight, transition label 0
  double weight_transition = 10.0;  // class weight, transition label 1
};

// Per-stroke feature via pointwise MLP then componentwise max over the
// stroke's reference points.
ad::Tensor rpts_pool(ad::Graph& g, const ad::Tensor& point_feats,
                     const ReferencePairSet& pairs, const Mlp& mlp);

// Ablation path: fixed-slot concatenation of raw point features, padded with
// zeros / truncated to `slots` per stroke. Output (M x slots*C).
ad::Tensor rpts_concat_pool(ad::Graph& g, const ad::Tensor& point_feats,
                            const ReferencePairSet& pairs, std::size_t slots);

ad::Tensor classify(ad::Graph& g, const ad::Tensor& stroke_feats, const Mlp& classifier);

// Logits over {same, transition} for each consecutive stroke pair; (M-1 x 2),
// empty when M == 1.
ad::Tensor aux_transition_logits(ad::Graph& g, const ad::Tensor& stroke_feats,
                                 const Mlp& aux_mlp);

// 0 where neighbours share a class, 1 at a class change; length M-1.
std::vector<int> make_aux_labels(const std::vector<int>& stroke_labels);

// Mean cross entropy over strokes plus aux_weight times the class-weighted
// transition cross entropy. The transition term vanishes (and records no
// operations) when aux_weight = 0 or M = 1.
ad::Tensor joint_loss(ad::Graph& g, const ad::Tensor& logits, const std::vector<int>& labels,
                      const ad::Tensor& aux_logits, const std::vector<int>& aux_labels,
                      const LossConfig& cfg);

}  // namespace strokenet
