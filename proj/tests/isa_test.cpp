#include <doctest.h>

#include <cmath>

#include "strokenet/grad_check.hpp"
#include "strokenet/isa.hpp"
#include "strokenet/rng.hpp"

using namespace strokenet;
using ad::Graph;
using ad::Tensor;

namespace {

Document toy_doc() {
  Document d;
  d.id = "toy";
  d.num_classes = 2;
  Stroke a, b, c;
  a.points = {{-0.8, 0.0}, {-0.55, 0.05}, {-0.3, 0.0}, {-0.05, -0.05}, {0.2, 0.0}};
  b.points = {{0.0, 0.5}, {0.1, 0.62}, {0.22, 0.5}, {0.3, 0.45}};
  c.points = {{0.5, -0.5}, {0.62, -0.42}};
  d.strokes = {a, b, c};
  return d;
}

ReferencePairSet toy_pairs(const Document& d, double tau = 0.2) {
  SelectionConfig cfg;
  cfg.tau = tau;
  return build_pair_geometry(d, select_reference_points(d, cfg));
}

IsaParams tiny_isa(std::uint64_t seed = 7, std::size_t conv = 4, std::size_t hidden = 6) {
  ParamRegistry reg(seed);
  return make_isa_params(reg, conv, hidden);
}

std::vector<ad::Tensor> isa_tensors(const IsaParams& p) {
  return {p.conv_stroke.kernel, p.conv_stroke.bias, p.lstm_stroke.w_ih, p.lstm_stroke.w_hh,
          p.lstm_stroke.bias,   p.conv_ref.kernel,  p.conv_ref.bias,    p.lstm_ref.w_ih,
          p.lstm_ref.w_hh,      p.lstm_ref.bias,    p.w_q,              p.w_k,
          p.w_v,                p.ln_gain,          p.ln_shift};
}

}  // namespace

TEST_CASE("pair geometry carries a consistent membership map") {
  Document d = toy_doc();
  ReferencePairSet pairs = toy_pairs(d);
  std::size_t expected_total = 0;
  SelectionConfig cfg;
  cfg.tau = 0.2;
  for (const Stroke& s : d.strokes)
    expected_total += select_reference_points(s, cfg).indices.size();
  CHECK(pairs.total() == expected_total);
  CHECK(pairs.num_strokes == 3);
  CHECK(pairs.points.size() == 2 * pairs.total());
  std::size_t mask_bits = 0;
  for (std::uint8_t b : pairs.mask) mask_bits += b;
  CHECK(mask_bits == pairs.total());
  for (std::size_t j = 0; j < pairs.total(); ++j) {
    CHECK(pairs.mask_at(pairs.slot_of[j], pairs.stroke_of[j]));
    CHECK(pairs.slot_of[j] < pairs.d_max);
    CHECK(pairs.stroke_of[j] < pairs.num_strokes);
  }
}

TEST_CASE("stroke features have shape (M x C) and repeat for identical strokes") {
  Document d = toy_doc();
  d.strokes.push_back(d.strokes[0]);  // duplicate stroke
  IsaParams p = tiny_isa();
  Graph g(false);
  Tensor f_s = encode_stroke_features(g, d, p);
  CHECK(f_s.rows() == 4);
  CHECK(f_s.cols() == 6);
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(f_s.at(0, c) == f_s.at(3, c));
  }
  for (double v : f_s.value()) CHECK(std::isfinite(v));
}

TEST_CASE("single-point stroke still encodes to a finite feature") {
  Document d;
  d.id = "single";
  d.num_classes = 2;
  Stroke s;
  s.points = {{0.1, 0.2}};
  d.strokes = {s};
  IsaParams p = tiny_isa();
  Graph g(false);
  Tensor f_s = encode_stroke_features(g, d, p);
  CHECK(f_s.rows() == 1);
  for (double v : f_s.value()) CHECK(std::isfinite(v));
}

TEST_CASE("reference features emit one row per reference point, order sensitive") {
  Document d = toy_doc();
  SelectionConfig cfg;
  cfg.tau = 0.2;
  auto sel = select_reference_points(d, cfg);
  IsaParams p = tiny_isa();
  Graph g(false);
  Tensor f_p = encode_reference_features(g, d, sel, p);
  std::size_t total = 0;
  for (const auto& s : sel) total += s.indices.size();
  CHECK(f_p.rows() == total);

  // reversing the reference order of stroke 0 changes its rows
  auto reversed = sel;
  std::reverse(reversed[0].indices.begin(), reversed[0].indices.end());
  // build_pair_geometry would reject unsorted indices, but the encoder only
  // consumes the coordinate sequence, which is what the LSTM is sensitive to
  Tensor f_p_rev = encode_reference_features(g, d, reversed, p);
  bool any_diff = false;
  for (std::size_t c = 0; c < f_p.cols(); ++c) {
    if (f_p.at(0, c) != f_p_rev.at(0, c)) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("single-stroke ISA reduces to ReLU(F_s + LayerNorm(V))") {
  Document d;
  d.id = "m1";
  d.num_classes = 2;
  Stroke s;
  s.points = {{-0.4, 0.0}, {-0.1, 0.1}, {0.2, 0.0}, {0.5, -0.1}};
  d.strokes = {s};
  SelectionConfig scfg;
  scfg.tau = 0.25;
  auto sel = select_reference_points(d, scfg);
  ReferencePairSet pairs = build_pair_geometry(d, sel);
  IsaParams p = tiny_isa();
  Graph g(false);
  Tensor f_s = encode_stroke_features(g, d, p);
  Tensor f_p = encode_reference_features(g, d, sel, p);
  Tensor r_f = inline_sequence_attention(g, f_p, f_s, pairs, p);

  // with one stroke the softmax has a single key, so out = V exactly
  Tensor v = g.matmul(f_s, p.w_v);
  Tensor expect = g.relu(
      g.add(broadcast_stroke_features(g, f_s, pairs), g.layer_norm(g.gather(v, std::vector<std::size_t>(pairs.total(), 0)), p.ln_gain, p.ln_shift)));
  REQUIRE(r_f.shape() == expect.shape());
  for (std::size_t i = 0; i < r_f.size(); ++i) {
    CHECK(r_f.value()[i] == doctest::Approx(expect.value()[i]).epsilon(1e-12));
  }
}

TEST_CASE("zeroed key projection gives uniform attention over strokes") {
  Document d = toy_doc();
  SelectionConfig scfg;
  scfg.tau = 0.2;
  auto sel = select_reference_points(d, scfg);
  ReferencePairSet pairs = build_pair_geometry(d, sel);
  IsaParams p = tiny_isa();
  for (double& v : p.w_k.value()) v = 0.0;  // all keys identical => weights 1/M

  Graph g(false);
  Tensor f_s = encode_stroke_features(g, d, p);
  Tensor f_p = encode_reference_features(g, d, sel, p);
  Tensor r_f = inline_sequence_attention(g, f_p, f_s, pairs, p);

  // expected: attention output is the mean of V rows for every point
  Tensor v = g.matmul(f_s, p.w_v);
  const std::size_t m = pairs.num_strokes, c = v.cols();
  std::vector<double> mean_row(c, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < c; ++j) mean_row[j] += v.at(r, j) / m;
  Tensor mean = Tensor::from_data({1, c}, mean_row);
  Tensor expect = g.relu(g.add(
      broadcast_stroke_features(g, f_s, pairs),
      g.layer_norm(g.gather(mean, std::vector<std::size_t>(pairs.total(), 0)), p.ln_gain,
                   p.ln_shift)));
  for (std::size_t i = 0; i < r_f.size(); ++i) {
    CHECK(r_f.value()[i] == doctest::Approx(expect.value()[i]).epsilon(1e-10));
  }
}

TEST_CASE("padding slots never change real rows") {
  Document d = toy_doc();
  ReferencePairSet pairs = toy_pairs(d);
  IsaParams p = tiny_isa();
  Graph g(false);
  Tensor f_s = encode_stroke_features(g, d, p);
  SelectionConfig scfg;
  scfg.tau = 0.2;
  auto sel = select_reference_points(d, scfg);
  Tensor f_p = encode_reference_features(g, d, sel, p);
  Tensor base = inline_sequence_attention(g, f_p, f_s, pairs, p);

  // grow D_max with pure padding slots
  ReferencePairSet padded = pairs;
  padded.d_max = pairs.d_max + 3;
  padded.mask.assign(padded.d_max * padded.num_strokes, 0);
  for (std::size_t j = 0; j < padded.total(); ++j)
    padded.mask[padded.slot_of[j] * padded.num_strokes + padded.stroke_of[j]] = 1;
  Tensor grown = inline_sequence_attention(g, f_p, f_s, padded, p);

  REQUIRE(base.size() == grown.size());
  CHECK(base.value() == grown.value());  // bit-identical
}

TEST_CASE("isa_off ablation shares one feature row across a stroke") {
  Document d = toy_doc();
  ReferencePairSet pairs = toy_pairs(d);
  IsaParams p = tiny_isa();
  Graph g(false);
  Tensor f_s = encode_stroke_features(g, d, p);
  Tensor r_f = broadcast_stroke_features(g, f_s, pairs);
  CHECK(r_f.rows() == pairs.total());
  for (std::size_t j = 0; j < pairs.total(); ++j) {
    for (std::size_t c = 0; c < r_f.cols(); ++c) {
      CHECK(r_f.at(j, c) == f_s.at(pairs.stroke_of[j], c));
    }
  }
}

TEST_CASE("gradient check through the full ISA block") {
  Document d = toy_doc();
  SelectionConfig scfg;
  scfg.tau = 0.2;
  auto sel = select_reference_points(d, scfg);
  ReferencePairSet pairs = build_pair_geometry(d, sel);
  IsaParams p = tiny_isa(11);
  Rng rng(31);
  std::vector<double> w(pairs.total() * 6);
  for (double& v : w) v = rng.uniform(-1, 1);
  Tensor probe = Tensor::from_data({pairs.total(), 6}, w);

  const double err = ad::grad_check(
      [&](Graph& g) {
        Tensor f_s = encode_stroke_features(g, d, p);
        Tensor f_p = encode_reference_features(g, d, sel, p);
        Tensor r_f = inline_sequence_attention(g, f_p, f_s, pairs, p);
        return g.sum(g.mul(r_f, probe));
      },
      isa_tensors(p));
  CHECK(err <= 1e-5);
}
