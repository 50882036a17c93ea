#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strokenet/heads.hpp"
#include "strokenet/hierarchy.hpp"
#include "strokenet/ref_select.hpp"
#include "strokenet/spatial.hpp"

namespace strokenet {

// Every knob of the pipeline; field defaults are the reference operating
// point (threshold 0.075, level sizes 1024/512/256/128, radii 0.05..0.4,
// ratios 1:5 / 2:2 / 5:1, Adam at 1e-3 with cosine annealing).
struct TrainConfig {
  // reference selection
  double tau = 0.075;
  RefStrategy strategy = RefStrategy::Dynamic;
  int fixed_count = 3;

  // sequence encoders / ISA
  std::size_t conv_channels = 16;
  std::size_t feature_channels = 32;  // C, the LSTM hidden width

  // hierarchical encoder-decoder
  std::vector<std::size_t> level_points = {1024, 512, 256, 128};
  std::vector<double> level_radius = {0.05, 0.1, 0.2, 0.4};
  std::vector<RatioSpec> ratios = {{1, 5}, {2, 2}, {5, 1}};
  std::size_t k_cap = 32;
  std::vector<std::vector<std::size_t>> branch_mlp = {
      {32, 64}, {64, 128}, {128, 256}, {256, 512}};
  std::vector<std::vector<std::size_t>> fp_mlp = {{256}, {256}, {128}, {128}};
  InterpConfig interp;

  // heads
  std::vector<std::size_t> rpts_mlp = {128};
  std::vector<std::size_t> classifier_hidden = {64};
  std::vector<std::size_t> aux_hidden = {64};
  std::size_t rpts_concat_slots = 8;
  LossConfig loss;
  std::size_t num_classes = 3;

  // optimization
  std::size_t epochs = 50;
  double lr0 = 0.001;
  double lr_min = 0.0;
  std::uint64_t rng_seed = 1;
  std::size_t grad_accum = 1;
  double early_stop_train_acc = 0.0;  // 0 disables early stopping

  // ablation switches
  bool isa_off = false;        // identical stroke features for every point
  bool ceq_ball_only = false;  // single 2:2 ball-query branch
  bool rpts_concat = false;    // fixed-slot feature concatenation
  bool aux_off = false;        // drop the transition supervision term

  std::vector<RatioSpec> effective_ratios() const {
    if (ceq_ball_only) return {{2, 2}};
    return ratios;
  }
  double effective_aux_weight() const { return aux_off ? 0.0 : loss.aux_weight; }
  SelectionConfig selection_config() const { return {tau, strategy, fixed_count}; }
  std::vector<LevelConfig> level_configs() const;

  void validate() const;  // throws ConfigError on inconsistent fields
};

std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& bytes);

// Applies the fields present in a JSON object on top of `base`; unknown
// fields are an error (they are usually typos).
TrainConfig config_with_overrides(const TrainConfig& base, const std::string& json_bytes);

// FNV-1a over the canonical JSON form; checkpoints store it so evaluation
// can detect configuration drift.
std::string config_hash(const TrainConfig& cfg);

}  // namespace strokenet
