#include "strokenet/config.hpp"

#include <cstdio>

#include <json.hpp>

#include "strokenet/errors.hpp"

namespace strokenet {

using nlohmann::json;

std::vector<LevelConfig> TrainConfig::level_configs() const {
  validate();
  std::vector<LevelConfig> out;
  for (std::size_t l = 0; l < level_points.size(); ++l) {
    LevelConfig lc;
    lc.n_points = level_points[l];
    lc.radius = level_radius[l];
    lc.ratios = effective_ratios();
    lc.k_cap = k_cap;
    lc.branch_mlp = branch_mlp[l];
    out.push_back(std::move(lc));
  }
  return out;
}

void TrainConfig::validate() const {
  if (tau <= 0) throw ConfigError("config: tau must be > 0");
  if (level_points.empty()) throw ConfigError("config: no hierarchy levels");
  if (level_radius.size() != level_points.size() || branch_mlp.size() != level_points.size() ||
      fp_mlp.size() != level_points.size())
    throw ConfigError("config: level_points, level_radius, branch_mlp and fp_mlp must align");
  for (std::size_t l = 1; l < level_points.size(); ++l) {
    if (level_points[l] >= level_points[l - 1])
      throw ConfigError("config: level_points must be strictly decreasing");
    if (level_radius[l] <= level_radius[l - 1])
      throw ConfigError("config: level_radius must be strictly increasing");
  }
  if (ratios.empty()) throw ConfigError("config: at least one ratio branch required");
  if (k_cap == 0) throw ConfigError("config: k_cap must be >= 1");
  if (num_classes < 2) throw ConfigError("config: num_classes must be >= 2");
  if (loss.aux_weight < 0) throw ConfigError("config: aux_weight must be >= 0");
  if (loss.weight_same <= 0 || loss.weight_transition <= 0)
    throw ConfigError("config: transition class weights must be > 0");
  if (grad_accum == 0) throw ConfigError("config: grad_accum must be >= 1");
  if (epochs == 0) throw ConfigError("config: epochs must be >= 1");
  if (interp.k == 0 || interp.p <= 0) throw ConfigError("config: invalid interpolation");
  if (fixed_count < 1) throw ConfigError("config: fixed_count must be >= 1");
}

namespace {

const char* strategy_name(RefStrategy s) {
  switch (s) {
    case RefStrategy::Dynamic: return "dynamic";
    case RefStrategy::Fixed: return "fixed";
    case RefStrategy::Total: return "total";
  }
  return "dynamic";
}

RefStrategy strategy_from_name(const std::string& s) {
  if (s == "dynamic") return RefStrategy::Dynamic;
  if (s == "fixed") return RefStrategy::Fixed;
  if (s == "total") return RefStrategy::Total;
  throw ConfigError("config: unknown strategy '" + s + "'");
}

json ratios_to_json(const std::vector<RatioSpec>& ratios) {
  json arr = json::array();
  for (const RatioSpec& r : ratios) arr.push_back({r.w, r.h});
  return arr;
}

std::vector<RatioSpec> ratios_from_json(const json& arr) {
  std::vector<RatioSpec> out;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("config: ratio entries are [w, h]");
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

json config_to_json_obj(const TrainConfig& c) {
  json j;
  j["tau"] = c.tau;
  j["strategy"] = strategy_name(c.strategy);
  j["fixed_count"] = c.fixed_count;
  j["conv_channels"] = c.conv_channels;
  j["feature_channels"] = c.feature_channels;
  j["level_points"] = c.level_points;
  j["level_radius"] = c.level_radius;
  j["ratios"] = ratios_to_json(c.ratios);
  j["k_cap"] = c.k_cap;
  j["branch_mlp"] = c.branch_mlp;
  j["fp_mlp"] = c.fp_mlp;
  j["interp_k"] = c.interp.k;
  j["interp_p"] = c.interp.p;
  j["interp_eps"] = c.interp.eps;
  j["rpts_mlp"] = c.rpts_mlp;
  j["classifier_hidden"] = c.classifier_hidden;
  j["aux_hidden"] = c.aux_hidden;
  j["rpts_concat_slots"] = c.rpts_concat_slots;
  j["aux_weight"] = c.loss.aux_weight;
  j["aux_weight_same"] = c.loss.weight_same;
  j["aux_weight_transition"] = c.loss.weight_transition;
  j["num_classes"] = c.num_classes;
  j["epochs"] = c.epochs;
  j["lr0"] = c.lr0;
  j["lr_min"] = c.lr_min;
  j["rng_seed"] = c.rng_seed;
  j["grad_accum"] = c.grad_accum;
  j["early_stop_train_acc"] = c.early_stop_train_acc;
  j["isa_off"] = c.isa_off;
  j["ceq_ball_only"] = c.ceq_ball_only;
  j["rpts_concat"] = c.rpts_concat;
  j["aux_off"] = c.aux_off;
  return j;
}

void apply_json(TrainConfig& c, const json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "tau") c.tau = value.get<double>();
    else if (key == "strategy") c.strategy = strategy_from_name(value.get<std::string>());
    else if (key == "fixed_count") c.fixed_count = value.get<int>();
    else if (key == "conv_channels") c.conv_channels = value.get<std::size_t>();
    else if (key == "feature_channels") c.feature_channels = value.get<std::size_t>();
    else if (key == "level_points") c.level_points = value.get<std::vector<std::size_t>>();
    else if (key == "level_radius") c.level_radius = value.get<std::vector<double>>();
    else if (key == "ratios") c.ratios = ratios_from_json(value);
    else if (key == "k_cap") c.k_cap = value.get<std::size_t>();
    else if (key == "branch_mlp") c.branch_mlp = value.get<std::vector<std::vector<std::size_t>>>();
    else if (key == "fp_mlp") c.fp_mlp = value.get<std::vector<std::vector<std::size_t>>>();
    else if (key == "interp_k") c.interp.k = value.get<std::size_t>();
    else if (key == "interp_p") c.interp.p = value.get<double>();
    else if (key == "interp_eps") c.interp.eps = value.get<double>();
    else if (key == "rpts_mlp") c.rpts_mlp = value.get<std::vector<std::size_t>>();
    else if (key == "classifier_hidden") c.classifier_hidden = value.get<std::vector<std::size_t>>();
    else if (key == "aux_hidden") c.aux_hidden = value.get<std::vector<std::size_t>>();
    else if (key == "rpts_concat_slots") c.rpts_concat_slots = value.get<std::size_t>();
    else if (key == "aux_weight") c.loss.aux_weight = value.get<double>();
    else if (key == "aux_weight_same") c.loss.weight_same = value.get<double>();
    else if (key == "aux_weight_transition") c.loss.weight_transition = value.get<double>();
    else if (key == "num_classes") c.num_classes = value.get<std::size_t>();
    else if (key == "epochs") c.epochs = value.get<std::size_t>();
    else if (key == "lr0") c.lr0 = value.get<double>();
    else if (key == "lr_min") c.lr_min = value.get<double>();
    else if (key == "rng_seed") c.rng_seed = value.get<std::uint64_t>();
    else if (key == "grad_accum") c.grad_accum = value.get<std::size_t>();
    else if (key == "early_stop_train_acc") c.early_stop_train_acc = value.get<double>();
    else if (key == "isa_off") c.isa_off = value.get<bool>();
    else if (key == "ceq_ball_only") c.ceq_ball_only = value.get<bool>();
    else if (key == "rpts_concat") c.rpts_concat = value.get<bool>();
    else if (key == "aux_off") c.aux_off = value.get<bool>();
    else throw ConfigError("config: unknown field '" + key + "'");
  }
}

}  // namespace

std::string config_to_json(const TrainConfig& cfg) { return config_to_json_obj(cfg).dump(2); }

TrainConfig config_from_json(const std::string& bytes) {
  TrainConfig cfg;
  return config_with_overrides(cfg, bytes);
}

TrainConfig config_with_overrides(const TrainConfig& base, const std::string& json_bytes) {
  json j;
  try {
    j = json::parse(json_bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  TrainConfig cfg = base;
  apply_json(cfg, j);
  cfg.validate();
  return cfg;
}

std::string config_hash(const TrainConfig& cfg) {
  const std::string canon = config_to_json_obj(cfg).dump();  // sorted keys
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace strokenet
