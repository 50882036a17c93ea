#include "strokenet/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "strokenet/errors.hpp"

namespace strokenet {

using ad::Graph;
using ad::Tensor;

std::vector<Tensor> ModelParams::trainable() const {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

std::vector<Tensor> ModelParams::aux_parameters() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named) {
    if (name.rfind("aux.", 0) == 0) out.push_back(t);
  }
  return out;
}

void ModelParams::zero_grads() const {
  for (const auto& [name, t] : named) const_cast<Tensor&>(t).zero_grad();
}

ModelParams make_model_params(const TrainConfig& cfg) {
  cfg.validate();
  ParamRegistry reg(cfg.rng_seed);
  ModelParams mp;
  // ISA first, hierarchy second, heads last; every stage draws the same
  // initial weights regardless of flags that only matter further down.
  mp.isa = make_isa_params(reg, cfg.conv_channels, cfg.feature_channels);

  const auto levels = cfg.level_configs();
  // fp_mlp entries are decoder steps, coarsest first; the last width is C_out
  mp.hierarchy = make_hierarchy_params(reg, cfg.feature_channels, levels, cfg.fp_mlp);

  const std::size_t c_out = cfg.fp_mlp.back().back();
  std::size_t stroke_feat_width;
  if (cfg.rpts_concat) {
    stroke_feat_width = cfg.rpts_concat_slots * c_out;
  } else {
    mp.rpts_mlp = reg.mlp("rpts", c_out, cfg.rpts_mlp, /*relu_last=*/true);
    stroke_feat_width = mp.rpts_mlp.out_width();
  }
  std::vector<std::size_t> cls_widths = cfg.classifier_hidden;
  cls_widths.push_back(cfg.num_classes);
  mp.classifier = reg.mlp("classifier", stroke_feat_width, cls_widths, /*relu_last=*/false);
  std::vector<std::size_t> aux_widths = cfg.aux_hidden;
  aux_widths.push_back(2);
  mp.aux_mlp = reg.mlp("aux", 2 * stroke_feat_width, aux_widths, /*relu_last=*/false);
  mp.named = reg.entries();
  return mp;
}

ModelOutput model_forward(Graph& g, const Document& doc, const TrainConfig& cfg,
                          const ModelParams& params, ForwardTrace* trace) {
  if (doc.strokes.empty()) throw ValidationError("model_forward: empty document");

  const auto selections = select_reference_points(doc, cfg.selection_config());
  ReferencePairSet pairs = build_pair_geometry(doc, selections);

  Tensor f_s = encode_stroke_features(g, doc, params.isa);
  Tensor f_p, r_f;
  if (cfg.isa_off) {
    r_f = broadcast_stroke_features(g, f_s, pairs);
  } else {
    f_p = encode_reference_features(g, doc, selections, params.isa);
    r_f = inline_sequence_attention(g, f_p, f_s, pairs, params.isa);
  }
  pairs.features = r_f;

  EncodeDecodeTrace hierarchy_trace;
  Tensor point_feats =
      encode_decode_traced(g, pairs, params.hierarchy, cfg.level_configs(), cfg.interp,
                           trace ? &hierarchy_trace : nullptr);

  Tensor stroke_feats = cfg.rpts_concat
                            ? rpts_concat_pool(g, point_feats, pairs, cfg.rpts_concat_slots)
                            : rpts_pool(g, point_feats, pairs, params.rpts_mlp);

  ModelOutput out;
  out.logits = classify(g, stroke_feats, params.classifier);
  out.aux_logits = aux_transition_logits(g, stroke_feats, params.aux_mlp);
  out.pairs = pairs;
  if (trace) {
    trace->pairs = pairs;
    trace->f_s = f_s;
    trace->f_p = f_p;
    trace->r_f = r_f;
    trace->point_feats = point_feats;
    trace->stroke_feats = stroke_feats;
    trace->hierarchy = std::move(hierarchy_trace);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCheckpointFormat = "strokenet-checkpoint-v1";
}

void save_checkpoint(const ModelParams& params, const TrainConfig& cfg,
                     const std::string& path) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  j["config_hash"] = config_hash(cfg);
  j["rng_seed"] = cfg.rng_seed;
  nlohmann::json p;
  for (const auto& [name, t] : params.named) {
    p[name] = {{"shape", t.shape()}, {"data", t.value()}};
  }
  j["params"] = p;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump();
  if (!out) throw Error("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("checkpoint: " + std::string(e.what()), e.byte);
  }
  if (!j.contains("format") || j["format"] != kCheckpointFormat)
    throw ConfigError("checkpoint: unrecognized format");

  Checkpoint ck;
  ck.config = config_from_json(j["config"].dump());
  if (j.contains("config_hash") && j["config_hash"] != config_hash(ck.config))
    throw ConfigError("checkpoint: stored hash does not match stored config");
  ck.params = make_model_params(ck.config);

  const nlohmann::json& p = j["params"];
  if (p.size() != ck.params.named.size())
    throw ConfigError("checkpoint: holds " + std::to_string(p.size()) + " parameters, model has " +
                      std::to_string(ck.params.named.size()));
  for (auto& [name, t] : ck.params.named) {
    if (!p.contains(name)) throw ConfigError("checkpoint: missing parameter '" + name + "'");
    const auto shape = p[name]["shape"].get<std::vector<std::size_t>>();
    if (shape != t.shape())
      throw ConfigError("checkpoint: shape mismatch for parameter '" + name + "'");
    auto data = p[name]["data"].get<std::vector<double>>();
    if (data.size() != t.size())
      throw ConfigError("checkpoint: data size mismatch for parameter '" + name + "'");
    t.value() = std::move(data);
  }
  return ck;
}

}  // namespace strokenet
