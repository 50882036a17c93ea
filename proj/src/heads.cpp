#include "strokenet/heads.hpp"

#include "strokenet/errors.hpp"

namespace strokenet {

using ad::Graph;
using ad::Tensor;

Tensor rpts_pool(Graph& g, const Tensor& point_feats, const ReferencePairSet& pairs,
                 const Mlp& mlp) {
  if (point_feats.rows() != pairs.total())
    throw ShapeError("rpts_pool: " + std::to_string(point_feats.rows()) +
                     " feature rows for " + std::to_string(pairs.total()) +
                     " reference points");
  Tensor h = mlp.apply(g, point_feats);
  return g.max_over_segments(h, pairs.stroke_of, pairs.num_strokes);
}

Tensor rpts_concat_pool(Graph& g, const Tensor& point_feats, const ReferencePairSet& pairs,
                        std::size_t slots) {
  if (slots == 0) throw ValidationError("rpts_concat_pool: slots must be >= 1");
  const std::size_t c = point_feats.cols();
  const std::size_t n = pairs.total();
  // Row n of the augmented matrix is all zeros and backs the padding slots.
  Tensor padded = g.concat({point_feats, Tensor::zeros({1, c})}, 0);
  std::vector<std::size_t> flat_of(pairs.num_strokes * pairs.d_max, n);
  for (std::size_t j = 0; j < n; ++j)
    flat_of[pairs.stroke_of[j] * pairs.d_max + pairs.slot_of[j]] = j;
  std::vector<std::size_t> idx(pairs.num_strokes * slots, n);
  for (std::size_t s = 0; s < pairs.num_strokes; ++s) {
    for (std::size_t slot = 0; slot < slots && slot < pairs.d_max; ++slot) {
      idx[s * slots + slot] = flat_of[s * pairs.d_max + slot];
    }
  }
  Tensor rows = g.gather(padded, idx);  // (M*slots x C)
  return g.reshape(rows, {pairs.num_strokes, slots * c});
}

Tensor classify(Graph& g, const Tensor& stroke_feats, const Mlp& classifier) {
  return classifier.apply(g, stroke_feats);
}

Tensor aux_transition_logits(Graph& g, const Tensor& stroke_feats, const Mlp& aux_mlp) {
  const std::size_t m = stroke_feats.rows();
  if (m <= 1) return Tensor::zeros({0, 2});
  std::vector<std::size_t> left(m - 1), right(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    left[i] = i;
    right[i] = i + 1;
  }
  Tensor pair_feats =
      g.concat({g.gather(stroke_feats, left), g.gather(stroke_feats, right)}, 1);
  return aux_mlp.apply(g, pair_feats);
}

std::vector<int> make_aux_labels(const std::vector<int>& stroke_labels) {
  std::vector<int> out;
  if (stroke_labels.size() <= 1) return out;
  out.reserve(stroke_labels.size() - 1);
  for (std::size_t i = 0; i + 1 < stroke_labels.size(); ++i) {
    out.push_back(stroke_labels[i] == stroke_labels[i + 1] ? 0 : 1);
  }
  return out;
}

Tensor joint_loss(Graph& g, const Tensor& logits, const std::vector<int>& labels,
                  const Tensor& aux_logits, const std::vector<int>& aux_labels,
                  const LossConfig& cfg) {
  if (cfg.aux_weight < 0.0) throw ValidationError("joint_loss: aux_weight must be >= 0");
  const std::vector<double> ones(labels.size(), 1.0);
  Tensor main_term = g.softmax_cross_entropy(logits, labels, ones);
  if (cfg.aux_weight == 0.0 || aux_labels.empty()) return main_term;

  if (!aux_logits.defined() || aux_logits.rows() != aux_labels.size())
    throw ShapeError("joint_loss: " + std::to_string(aux_labels.size()) +
                     " transition labels for " +
                     std::to_string(aux_logits.defined() ? aux_logits.rows() : 0) + " rows");
  std::vector<double> aux_w(aux_labels.size());
  for (std::size_t i = 0; i < aux_labels.size(); ++i) {
    aux_w[i] = aux_labels[i] == 0 ? cfg.weight_same : cfg.weight_transition;
  }
  Tensor aux_term = g.softmax_cross_entropy(aux_logits, aux_labels, aux_w);
  return g.add(main_term, g.scale(aux_term, cfg.aux_weight));
}

}  // namespace strokenet
