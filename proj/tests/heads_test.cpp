#include <doctest.h>

#include <cmath>

#include "strokenet/grad_check.hpp"
#include "strokenet/heads.hpp"
#include "strokenet/rng.hpp"

using namespace strokenet;
using ad::Graph;
using ad::Tensor;

namespace {

// Pair set with three strokes holding 2, 1 and 3 reference points.
ReferencePairSet small_pairs() {
  ReferencePairSet p;
  p.num_strokes = 3;
  p.stroke_of = {0, 0, 1, 2, 2, 2};
  p.slot_of = {0, 1, 0, 0, 1, 2};
  p.d_max = 3;
  p.points.assign(12, 0.0);
  p.mask.assign(p.d_max * p.num_strokes, 0);
  for (std::size_t j = 0; j < p.stroke_of.size(); ++j)
    p.mask[p.slot_of[j] * p.num_strokes + p.stroke_of[j]] = 1;
  return p;
}

Tensor random_feats(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> f(rows * cols);
  for (double& v : f) v = rng.uniform(-1, 1);
  return Tensor::from_data({rows, cols}, std::move(f));
}

}  // namespace

TEST_CASE("rpts_pool on a single-point stroke is the MLP output") {
  Rng rng(1);
  ReferencePairSet pairs = small_pairs();
  Tensor feats = random_feats(rng, 6, 4);
  ParamRegistry reg(2);
  Mlp mlp = reg.mlp("rpts", 4, {5}, true);
  Graph g(false);
  Tensor pooled = rpts_pool(g, feats, pairs, mlp);
  REQUIRE(pooled.rows() == 3);
  Tensor direct = mlp.apply(g, g.gather(feats, {2}));  // stroke 1's only point
  for (std::size_t c = 0; c < 5; ++c) {
    CHECK(pooled.at(1, c) == doctest::Approx(direct.at(0, c)).epsilon(1e-13));
  }
}

TEST_CASE("rpts_pool ignores reference point order within a stroke") {
  Rng rng(3);
  ReferencePairSet pairs = small_pairs();
  Tensor feats = random_feats(rng, 6, 4);
  ParamRegistry reg(4);
  Mlp mlp = reg.mlp("rpts", 4, {5}, true);

  // permute stroke 2's rows (flat rows 3, 4, 5 -> 5, 3, 4)
  ReferencePairSet permuted = pairs;
  Graph g(false);
  Tensor feats_perm = g.gather(feats, {0, 1, 2, 5, 3, 4});
  Tensor a = rpts_pool(g, feats, pairs, mlp);
  Tensor b = rpts_pool(g, feats_perm, permuted, mlp);
  CHECK(a.value() == b.value());
}

TEST_CASE("rpts_concat_pool pads and truncates to fixed slots") {
  Rng rng(5);
  ReferencePairSet pairs = small_pairs();
  Tensor feats = random_feats(rng, 6, 4);
  Graph g(false);
  Tensor cat = rpts_concat_pool(g, feats, pairs, 2);
  REQUIRE(cat.rows() == 3);
  REQUIRE(cat.cols() == 8);
  // stroke 1 has one point: second slot is zero padding
  for (std::size_t c = 4; c < 8; ++c) CHECK(cat.at(1, c) == 0.0);
  // stroke 0 slot 0 equals flat row 0
  for (std::size_t c = 0; c < 4; ++c) CHECK(cat.at(0, c) == feats.at(0, c));
  // stroke 2 is truncated to slots {0, 1} = flat rows 3, 4
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(cat.at(2, c) == feats.at(3, c));
    CHECK(cat.at(2, 4 + c) == feats.at(4, c));
  }
}

TEST_CASE("classifier shape and zero-weight uniformity") {
  Rng rng(6);
  ParamRegistry reg(7);
  Mlp cls = reg.mlp("cls", 5, {4, 3}, false);
  Tensor feats = random_feats(rng, 6, 5);
  Graph g(false);
  Tensor logits = classify(g, feats, cls);
  CHECK(logits.rows() == 6);
  CHECK(logits.cols() == 3);

  for (Linear& l : cls.layers) {
    for (double& v : l.w.value()) v = 0.0;
    for (double& v : l.b.value()) v = 0.0;
  }
  Tensor zero_logits = classify(g, feats, cls);
  Tensor probs = g.softmax(zero_logits, 1);
  for (double v : probs.value()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("aux transition logits follow the M-1 rule") {
  Rng rng(8);
  ParamRegistry reg(9);
  Mlp aux = reg.mlp("aux", 8, {6, 2}, false);
  Graph g(false);
  CHECK(aux_transition_logits(g, random_feats(rng, 1, 4), aux).rows() == 0);
  CHECK(aux_transition_logits(g, random_feats(rng, 4, 4), aux).rows() == 3);

  // identical stroke features give identical transition rows
  Tensor one = random_feats(rng, 1, 4);
  Tensor same = g.gather(one, {0, 0, 0, 0});
  Tensor rows = aux_transition_logits(g, same, aux);
  for (std::size_t r = 1; r < 3; ++r) {
    CHECK(rows.at(r, 0) == rows.at(0, 0));
    CHECK(rows.at(r, 1) == rows.at(0, 1));
  }
}

TEST_CASE("aux labels from class sequences") {
  CHECK(make_aux_labels({0, 0, 1}) == std::vector<int>{0, 1});
  CHECK(make_aux_labels({0}) == std::vector<int>{});
  CHECK(make_aux_labels({0, 1, 0, 0}) == std::vector<int>{1, 1, 0});
}

TEST_CASE("joint loss on uniform logits is ln T") {
  Graph g(true);
  Tensor logits = Tensor::zeros({5, 3});
  LossConfig cfg;
  cfg.aux_weight = 0.0;
  Tensor loss = joint_loss(g, logits, {0, 1, 2, 0, 1}, Tensor::zeros({4, 2}), {0, 0, 0, 1}, cfg);
  CHECK(loss.item() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("joint loss vanishes for confident correct logits") {
  Graph g(false);
  Tensor logits = Tensor::from_data({2, 3}, {100, 0, 0, 0, 100, 0});
  LossConfig cfg;
  cfg.aux_weight = 0.0;
  Tensor loss = joint_loss(g, logits, {0, 1}, Tensor::zeros({1, 2}), {1}, cfg);
  CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("joint loss matches an independent scalar oracle") {
  Graph g(false);
  Tensor logits = Tensor::from_data({2, 3}, {0.4, -0.2, 0.1, -0.5, 0.3, 0.9});
  Tensor aux_logits = Tensor::from_data({1, 2}, {0.25, -0.75});
  const std::vector<int> labels = {2, 1};
  const std::vector<int> aux_labels = {1};
  LossConfig cfg;  // aux_weight 1, weights {1, 10}

  Tensor loss = joint_loss(g, logits, labels, aux_logits, aux_labels, cfg);

  auto ce_row = [](std::vector<double> row, int label) {
    double denom = 0;
    for (double v : row) denom += std::exp(v);
    return -std::log(std::exp(row[label]) / denom);
  };
  const double main_term = 0.5 * (ce_row({0.4, -0.2, 0.1}, 2) + ce_row({-0.5, 0.3, 0.9}, 1));
  const double aux_term = (10.0 * ce_row({0.25, -0.75}, 1)) / 10.0;
  CHECK(loss.item() == doctest::Approx(main_term + aux_term).epsilon(1e-12));
}

TEST_CASE("duplicating transition samples 10x equals the 1:10 weighting") {
  Graph g(false);
  Tensor aux = Tensor::from_data({3, 2}, {0.2, -0.4, 1.5, 0.3, -0.7, 0.1});
  const std::vector<int> labels = {1, 0, 1};
  std::vector<double> weighted = {10, 1, 10};
  const double w_loss = g.softmax_cross_entropy(aux, labels, weighted).item();

  // duplicate each label-1 row ten times at unit weight
  std::vector<double> rows;
  std::vector<int> dup_labels;
  for (std::size_t i = 0; i < 3; ++i) {
    const int copies = labels[i] == 1 ? 10 : 1;
    for (int r = 0; r < copies; ++r) {
      rows.push_back(aux.at(i, 0));
      rows.push_back(aux.at(i, 1));
      dup_labels.push_back(labels[i]);
    }
  }
  Tensor dup = Tensor::from_data({dup_labels.size(), 2}, rows);
  const double dup_loss =
      g.softmax_cross_entropy(dup, dup_labels, std::vector<double>(dup_labels.size(), 1.0))
          .item();
  CHECK(w_loss == doctest::Approx(dup_loss).epsilon(1e-12));
}

TEST_CASE("loss decreases when the true-class logit grows") {
  Graph g(false);
  LossConfig cfg;
  cfg.aux_weight = 0.0;
  double prev = 1e9;
  for (double bump : {0.0, 0.5, 1.0, 2.0}) {
    Tensor logits = Tensor::from_data({1, 3}, {0.1 + bump, -0.2, 0.3});
    const double l = joint_loss(g, logits, {0}, Tensor(), {}, cfg).item();
    CHECK(l < prev);
    CHECK(l >= 0.0);
    prev = l;
  }
}
