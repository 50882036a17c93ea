#pragma once

#include <vector>

#include "strokenet/isa.hpp"
#include "strokenet/nn.hpp"
#include "strokenet/spatial.hpp"
#include "strokenet/tensor.hpp"

namespace strokenet {

struct LevelConfig {
  std::size_t n_points = 0;
  double radius = 0.1;
  std::vector<RatioSpec> ratios = {{1, 5}, {2, 2}, {5, 1}};
  std::size_t k_cap = 32;
  std::vector<std::size_t> branch_mlp = {32, 64};  // shared widths for every ratio branch
};

// One abstraction level: point coordinates plus their features.
struct LevelState {
  Coords coords;      // N_l x 2
  ad::Tensor feats;   // N_l x C_l
  std::size_t count() const { return coords.size() / 2; }
};

struct InterpConfig {
  std::size_t k = 3;
  double p = 2.0;
  double eps = 1e-8;
};

struct SetAbstractionParams {
  std::vector<Mlp> branch_mlps;  // one per ratio branch
};

struct HierarchyParams {
  std::vector<SetAbstractionParams> levels;
  std::vector<Mlp> fp_mlps;  // decoder MLPs, coarse-to-fine order
};

// Builds parameters for the full encoder-decoder given the input feature
// width. fp_widths[i] are the MLP widths for decoder step i (coarse first);
// the last entry's final width is the network output width.
HierarchyParams make_hierarchy_params(ParamRegistry& reg, std::size_t input_channels,
                                      const std::vector<LevelConfig>& levels,
                                      const std::vector<std::vector<std::size_t>>& fp_widths);

// Downsample by FPS, group per ratio branch with CEQ, run the branch MLP on
// re-centered member coordinates concatenated with member features, max-pool
// per group, concatenate branches channelwise. n_points clamps to the
// available count.
LevelState set_abstraction(ad::Graph& g, const LevelState& state, const LevelConfig& cfg,
                           const SetAbstractionParams& params);

// Inverse-distance interpolation of source features onto destination
// coordinates (k nearest sources, weights 1/max(d, eps)^p, normalized).
ad::Tensor interpolate_features(ad::Graph& g, const Coords& src_coords,
                                const ad::Tensor& src_feats, const Coords& dst_coords,
                                const InterpConfig& cfg);

// Decoder walk, coarsest level back to the input pairs: interpolate, append
// skip features, MLP. `levels[0]` is the input pair level.
ad::Tensor feature_propagation(ad::Graph& g, const std::vector<LevelState>& levels,
                               const std::vector<Mlp>& fp_mlps, const InterpConfig& cfg);

// Full encoder-decoder over a pair set with features attached.
ad::Tensor encode_decode(ad::Graph& g, const ReferencePairSet& pairs,
                         const HierarchyParams& params, const std::vector<LevelConfig>& levels,
                         const InterpConfig& interp);

// Intermediate states for tests and diagnostics.
struct EncodeDecodeTrace {
  std::vector<LevelState> level_states;  // [0] = input pairs, then one per SA level
  std::vector<std::vector<std::size_t>> centroid_indices;
};

ad::Tensor encode_decode_traced(ad::Graph& g, const ReferencePairSet& pairs,
                                const HierarchyParams& params,
                                const std::vector<LevelConfig>& levels,
                                const InterpConfig& interp, EncodeDecodeTrace* trace);

}  // namespace strokenet
