#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "strokenet/data_io.hpp"
#include "strokenet/errors.hpp"
#include "strokenet/grad_check.hpp"
#include "strokenet/heads.hpp"
#include "strokenet/model.hpp"
#include "strokenet/rng.hpp"
#include "strokenet/runner.hpp"
#include "strokenet/svg.hpp"

using namespace strokenet;
using ad::Graph;
using ad::Tensor;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.conv_channels = 4;
  cfg.feature_channels = 6;
  cfg.level_points = {8, 4};
  cfg.level_radius = {0.3, 0.6};
  cfg.k_cap = 4;
  cfg.branch_mlp = {{6, 6}, {6, 6}};
  cfg.fp_mlp = {{8}, {8}};
  cfg.rpts_mlp = {8};
  cfg.classifier_hidden = {8};
  cfg.aux_hidden = {8};
  cfg.num_classes = 3;
  cfg.rng_seed = 42;
  cfg.epochs = 1;
  return cfg;
}

Document toy_doc3() {
  Document d;
  d.id = "toy3";
  d.num_classes = 3;
  Stroke a, b, c;
  a.points = {{-0.8, -0.2}, {-0.55, -0.1}, {-0.3, -0.2}, {-0.05, -0.15}, {0.2, -0.2}};
  a.label = 0;
  b.points = {{-0.1, 0.5}, {0.05, 0.66}, {0.22, 0.5}, {0.35, 0.42}};
  b.label = 1;
  c.points = {{0.5, -0.6}, {0.66, -0.45}, {0.8, -0.6}};
  c.label = 2;
  d.strokes = {a, b, c};
  return d;
}

std::vector<Document> tiny_corpus(std::size_t n, std::uint64_t seed) {
  CorpusSpec spec;
  spec.num_documents = n;
  spec.rng_seed = seed;
  spec.min_strokes_per_doc = 12;
  spec.max_strokes_per_doc = 20;
  return generate_corpus(spec);
}

bool same_values(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && a.value() == b.value();
}

}  // namespace

TEST_CASE("one training step on one document yields a finite loss") {
  TrainConfig cfg = tiny_config();
  std::vector<Document> corpus = {toy_doc3()};
  TrainResult r = train(corpus, {}, cfg);
  REQUIRE(r.log.size() == 1);
  CHECK(std::isfinite(r.log[0].mean_loss));
  CHECK(r.log[0].mean_loss > 0.0);
}

TEST_CASE("training rejects unlabeled corpora") {
  TrainConfig cfg = tiny_config();
  Document d = toy_doc3();
  d.strokes[1].label.reset();
  CHECK_THROWS_AS(train({d}, {}, cfg), ValidationError);
}

TEST_CASE("seeded training is bit-reproducible, checkpoint included") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  std::vector<Document> corpus = tiny_corpus(4, 99);
  TrainResult a = train(corpus, {}, cfg);
  TrainResult b = train(corpus, {}, cfg);
  REQUIRE(a.params.named.size() == b.params.named.size());
  for (std::size_t i = 0; i < a.params.named.size(); ++i) {
    CHECK(a.params.named[i].first == b.params.named[i].first);
    CHECK(a.params.named[i].second.value() == b.params.named[i].second.value());
  }
  const char* pa = "build_ckpt_a.json";
  const char* pb = "build_ckpt_b.json";
  save_checkpoint(a.params, cfg, pa);
  save_checkpoint(b.params, cfg, pb);
  std::ifstream fa(pa), fb(pb);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  std::remove(pa);
  std::remove(pb);
}

TEST_CASE("loss trends down over training on a small corpus") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 10;
  std::vector<Document> corpus = tiny_corpus(8, 1234);
  TrainResult r = train(corpus, {}, cfg);
  REQUIRE(r.log.size() == 10);
  CHECK(r.log[9].mean_loss < r.log[0].mean_loss);
}

TEST_CASE("full network gradient check on a 3-stroke document") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  const Document doc = normalize_document(toy_doc3());
  const std::vector<int> labels = {0, 1, 2};
  const std::vector<int> aux = make_aux_labels(labels);

  const double err = ad::grad_check(
      [&](Graph& g) {
        ModelOutput out = model_forward(g, doc, cfg, params);
        LossConfig lc = cfg.loss;
        return joint_loss(g, out.logits, labels, out.aux_logits, aux, lc);
      },
      params.trainable());
  CHECK(err <= 1e-4);
}

TEST_CASE("aux_weight zero leaves aux parameter gradients bit-exactly zero") {
  TrainConfig cfg = tiny_config();
  cfg.aux_off = true;
  ModelParams params = make_model_params(cfg);
  const Document doc = normalize_document(toy_doc3());
  const std::vector<int> labels = {0, 1, 2};

  Graph g(true);
  ModelOutput out = model_forward(g, doc, cfg, params);
  LossConfig lc = cfg.loss;
  lc.aux_weight = cfg.effective_aux_weight();
  Tensor loss = joint_loss(g, out.logits, labels, out.aux_logits, make_aux_labels(labels), lc);
  g.backward(loss);

  const auto aux_params = params.aux_parameters();
  REQUIRE(!aux_params.empty());
  for (const Tensor& t : aux_params) {
    for (double v : t.grad()) {
      CHECK(v == 0.0);
      CHECK_FALSE(std::signbit(v));
    }
  }
  // and the main head did receive gradient
  bool any_nonzero = false;
  for (const auto& [name, t] : params.named) {
    if (name.rfind("classifier", 0) == 0) {
      for (double v : t.grad()) any_nonzero = any_nonzero || v != 0.0;
    }
  }
  CHECK(any_nonzero);
}

TEST_CASE("each ablation flag changes only its designated path") {
  TrainConfig base = tiny_config();
  const Document doc = normalize_document(toy_doc3());

  ModelParams params = make_model_params(base);
  Graph g(false);
  ForwardTrace full;
  model_forward(g, doc, base, params, &full);

  SUBCASE("isa_off keeps the stroke encoder bit-identical") {
    TrainConfig cfg = base;
    cfg.isa_off = true;
    ModelParams p2 = make_model_params(cfg);
    ForwardTrace t2;
    model_forward(g, doc, cfg, p2, &t2);
    CHECK(same_values(full.f_s, t2.f_s));
    CHECK_FALSE(same_values(full.r_f, t2.r_f));
  }

  SUBCASE("ceq_ball_only keeps the whole ISA stack bit-identical") {
    TrainConfig cfg = base;
    cfg.ceq_ball_only = true;
    ModelParams p2 = make_model_params(cfg);
    ForwardTrace t2;
    model_forward(g, doc, cfg, p2, &t2);
    CHECK(same_values(full.f_s, t2.f_s));
    CHECK(same_values(full.f_p, t2.f_p));
    CHECK(same_values(full.r_f, t2.r_f));
    // centroids depend only on geometry, not on the branch set
    REQUIRE(full.hierarchy.centroid_indices.size() == t2.hierarchy.centroid_indices.size());
    CHECK(full.hierarchy.centroid_indices == t2.hierarchy.centroid_indices);
    // single branch means narrower level features
    CHECK(t2.hierarchy.level_states[1].feats.cols() ==
          full.hierarchy.level_states[1].feats.cols() / 3);
  }

  SUBCASE("rpts_concat keeps everything through point features bit-identical") {
    TrainConfig cfg = base;
    cfg.rpts_concat = true;
    ModelParams p2 = make_model_params(cfg);
    ForwardTrace t2;
    model_forward(g, doc, cfg, p2, &t2);
    CHECK(same_values(full.f_s, t2.f_s));
    CHECK(same_values(full.r_f, t2.r_f));
    CHECK(same_values(full.point_feats, t2.point_feats));
    CHECK_FALSE(same_values(full.stroke_feats, t2.stroke_feats));
  }

  SUBCASE("aux_off changes no forward tensor at all") {
    TrainConfig cfg = base;
    cfg.aux_off = true;
    ModelParams p2 = make_model_params(cfg);
    ForwardTrace t2;
    ModelOutput o2 = model_forward(g, doc, cfg, p2, &t2);
    ForwardTrace t1;
    ModelOutput o1 = model_forward(g, doc, base, params, &t1);
    CHECK(same_values(o1.logits, o2.logits));
    CHECK(same_values(o1.aux_logits, o2.aux_logits));
  }
}

TEST_CASE("checkpoint round-trips parameters and config") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  const char* path = "build_ckpt_rt.json";
  save_checkpoint(params, cfg, path);
  Checkpoint ck = load_checkpoint(path);
  CHECK(config_hash(ck.config) == config_hash(cfg));
  REQUIRE(ck.params.named.size() == params.named.size());
  for (std::size_t i = 0; i < params.named.size(); ++i) {
    CHECK(ck.params.named[i].first == params.named[i].first);
    CHECK(ck.params.named[i].second.value() == params.named[i].second.value());
  }
  std::remove(path);
}

TEST_CASE("tampered checkpoint config is rejected") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  const char* path = "build_ckpt_bad.json";
  save_checkpoint(params, cfg, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  in.close();
  std::string bytes = ss.str();
  const std::string needle = "\"tau\":0.075";
  const auto pos = bytes.find(needle);
  REQUIRE(pos != std::string::npos);
  bytes.replace(pos, needle.size(), "\"tau\":0.085");
  std::ofstream out(path);
  out << bytes;
  out.close();
  CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
  std::remove(path);
}

TEST_CASE("predict on a single-stroke document") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  Document d;
  d.id = "one";
  d.num_classes = 3;
  Stroke s;
  s.points = {{0, 0}, {0.3, 0.1}, {0.6, 0}};
  d.strokes = {s};
  Prediction p = predict(d, params, cfg);
  CHECK(p.labels.size() == 1);
  CHECK(p.transitions.empty());
  Prediction q = predict(d, params, cfg);
  CHECK(p.labels == q.labels);
}

TEST_CASE("evaluate produces a sane report and rejects empty corpora") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  std::vector<Document> corpus = tiny_corpus(3, 5);
  EvalReport r = evaluate(corpus, params, cfg);
  CHECK(r.total_strokes > 0);
  CHECK(r.overall_accuracy >= 0.0);
  CHECK(r.overall_accuracy <= 1.0);
  CHECK_THROWS_AS(evaluate({}, params, cfg), ValidationError);
}

TEST_CASE("dyadic translation before normalization changes nothing downstream") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  Document d;
  d.id = "dyadic";
  d.num_classes = 3;
  Stroke a, b;
  a.points = {{0.0, 0.0}, {0.25, 0.125}, {0.5, 0.0}, {0.75, -0.125}};
  b.points = {{0.25, 0.5}, {0.5, 0.625}, {0.75, 0.5}};
  d.strokes = {a, b};
  Document shifted = d;
  for (auto& s : shifted.strokes) {
    for (auto& p : s.points) {
      p.x += 0.125;
      p.y += 0.125;
    }
  }
  const Document n1 = normalize_document(d);
  const Document n2 = normalize_document(shifted);
  Graph g(false);
  ModelOutput o1 = model_forward(g, n1, cfg, params);
  ModelOutput o2 = model_forward(g, n2, cfg, params);
  CHECK(o1.logits.value() == o2.logits.value());
}

TEST_CASE("epoch log lines are JSON objects") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 2;
  std::ostringstream log;
  train(tiny_corpus(3, 77), tiny_corpus(2, 78), cfg, &log);
  std::istringstream lines(log.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    CHECK(line.front() == '{');
    CHECK(line.find("\"epoch\"") != std::string::npos);
    CHECK(line.find("\"val_accuracy\"") != std::string::npos);
    ++count;
  }
  CHECK(count == 2);
}

TEST_CASE("export_svg renders one polyline per stroke from the palette") {
  Document d = toy_doc3();
  std::vector<int> labels = {0, 1, 2};
  const std::string svg = export_svg(d, labels);
  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 9;
  }
  CHECK(polylines == 3);
  CHECK(svg.find(svg_palette()[0]) != std::string::npos);
  CHECK(svg.find(svg_palette()[1]) != std::string::npos);
  CHECK(svg.find(svg_palette()[2]) != std::string::npos);
  CHECK(svg == export_svg(d, labels));  // byte-stable
  CHECK_THROWS_AS(export_svg(d, {0}), ValidationError);
}

TEST_CASE("fixed and total strategies run end to end") {
  TrainConfig cfg = tiny_config();
  std::vector<Document> corpus = {toy_doc3()};
  for (RefStrategy s : {RefStrategy::Fixed, RefStrategy::Total}) {
    cfg.strategy = s;
    cfg.fixed_count = 3;
    TrainResult r = train(corpus, {}, cfg);
    CHECK(std::isfinite(r.log[0].mean_loss));
  }
}

TEST_CASE("degenerate zero-extent document still runs the pipeline") {
  TrainConfig cfg = tiny_config();
  ModelParams params = make_model_params(cfg);
  Document d;
  d.id = "degenerate";
  d.num_classes = 3;
  Stroke s1, s2;
  s1.points = {{2, 2}, {2, 2}, {2, 2}};
  s2.points = {{2, 2}};
  d.strokes = {s1, s2};
  Prediction p = predict(d, params, cfg);
  CHECK(p.labels.size() == 2);
}
