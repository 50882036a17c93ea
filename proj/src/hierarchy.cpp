#include "strokenet/hierarchy.hpp"

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet {

using ad::Graph;
using ad::Tensor;

HierarchyParams make_hierarchy_params(ParamRegistry& reg, std::size_t input_channels,
                                      const std::vector<LevelConfig>& levels,
                                      const std::vector<std::vector<std::size_t>>& fp_widths) {
  if (fp_widths.size() != levels.size())
    throw ConfigError("make_hierarchy_params: need one fp width list per level");
  HierarchyParams hp;
  std::vector<std::size_t> level_channels;  // feature width entering each level
  std::size_t c = input_channels;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    level_channels.push_back(c);
    SetAbstractionParams sa;
    std::size_t out_c = 0;
    for (std::size_t br = 0; br < levels[l].ratios.size(); ++br) {
      sa.branch_mlps.push_back(reg.mlp(
          "sa" + std::to_string(l) + ".branch" + std::to_string(br), 2 + c,
          levels[l].branch_mlp, /*relu_last=*/true));
      out_c += levels[l].branch_mlp.back();
    }
    hp.levels.push_back(std::move(sa));
    c = out_c;
  }
  // Decoder steps, coarse to fine: step i maps level L-i features onto level
  // L-i-1 coordinates; input width = coarse width + skip width.
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::size_t fine_level = levels.size() - 1 - i;  // skip source
    const std::size_t skip_c = level_channels[fine_level];
    hp.fp_mlps.push_back(reg.mlp("fp" + std::to_string(i), c + skip_c, fp_widths[i],
                                 /*relu_last=*/true));
    c = fp_widths[i].back();
  }
  return hp;
}

LevelState set_abstraction(Graph& g, const LevelState& state, const LevelConfig& cfg,
                           const SetAbstractionParams& params) {
  const std::size_t n_in = state.count();
  if (n_in == 0) throw ValidationError("set_abstraction: empty level");
  if (params.branch_mlps.size() != cfg.ratios.size())
    throw ConfigError("set_abstraction: " + std::to_string(params.branch_mlps.size()) +
                      " branch MLPs for " + std::to_string(cfg.ratios.size()) + " ratios");
  const std::size_t n_out = std::min(cfg.n_points, n_in);  // clamp on small documents

  const std::vector<std::size_t> centroids = farthest_point_sampling(state.coords, n_out, 0);
  const GroupIndex groups =
      cross_ellipse_query(state.coords, centroids, cfg.radius, cfg.ratios, cfg.k_cap);

  LevelState out;
  out.coords.reserve(n_out * 2);
  for (std::size_t c : centroids) {
    out.coords.push_back(state.coords[2 * c]);
    out.coords.push_back(state.coords[2 * c + 1]);
  }

  std::vector<std::size_t> segment(n_out * cfg.k_cap);
  for (std::size_t ci = 0; ci < n_out; ++ci)
    for (std::size_t s = 0; s < cfg.k_cap; ++s) segment[ci * cfg.k_cap + s] = ci;

  std::vector<Tensor> branch_feats;
  for (std::size_t br = 0; br < cfg.ratios.size(); ++br) {
    std::vector<std::size_t> member_idx(n_out * cfg.k_cap);
    std::vector<double> rel(n_out * cfg.k_cap * 2);
    for (std::size_t ci = 0; ci < n_out; ++ci) {
      const double cx = out.coords[2 * ci], cy = out.coords[2 * ci + 1];
      for (std::size_t s = 0; s < cfg.k_cap; ++s) {
        const std::size_t m = groups.neighbor(ci, br, s);
        member_idx[ci * cfg.k_cap + s] = m;
        rel[(ci * cfg.k_cap + s) * 2] = state.coords[2 * m] - cx;
        rel[(ci * cfg.k_cap + s) * 2 + 1] = state.coords[2 * m + 1] - cy;
      }
    }
    Tensor rel_t = Tensor::from_data({n_out * cfg.k_cap, 2}, std::move(rel));
    Tensor members = g.gather(state.feats, member_idx);
    Tensor x = g.concat({rel_t, members}, 1);
    Tensor h = params.branch_mlps[br].apply(g, x);
    branch_feats.push_back(g.max_over_segments(h, segment, n_out));
  }
  out.feats = branch_feats.size() == 1 ? branch_feats[0] : g.concat(branch_feats, 1);
  return out;
}

Tensor interpolate_features(Graph& g, const Coords& src_coords, const Tensor& src_feats,
                            const Coords& dst_coords, const InterpConfig& cfg) {
  const std::size_t n_src = src_coords.size() / 2;
  const std::size_t n_dst = dst_coords.size() / 2;
  if (n_src == 0) throw ValidationError("interpolate_features: no source points");
  if (src_feats.rows() != n_src)
    throw ShapeError("interpolate_features: " + std::to_string(src_feats.rows()) +
                     " feature rows for " + std::to_string(n_src) + " points");
  if (cfg.k == 0) throw ValidationError("interpolate_features: k must be >= 1");
  const std::size_t k = std::min(cfg.k, n_src);

  // Row-stochastic interpolation matrix; gradients flow through matmul.
  std::vector<double> weight(n_dst * n_src, 0.0);
  std::vector<std::pair<double, std::size_t>> nearest;
  for (std::size_t d = 0; d < n_dst; ++d) {
    nearest.clear();
    for (std::size_t s = 0; s < n_src; ++s) {
      const double dx = dst_coords[2 * d] - src_coords[2 * s];
      const double dy = dst_coords[2 * d + 1] - src_coords[2 * s + 1];
      nearest.emplace_back(dx * dx + dy * dy, s);
    }
    std::partial_sort(nearest.begin(), nearest.begin() + k, nearest.end());
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double dist = std::max(std::sqrt(nearest[i].first), cfg.eps);
      const double w = 1.0 / std::pow(dist, cfg.p);
      weight[d * n_src + nearest[i].second] = w;
      total += w;
    }
    for (std::size_t i = 0; i < k; ++i) weight[d * n_src + nearest[i].second] /= total;
  }
  Tensor w = Tensor::from_data({n_dst, n_src}, std::move(weight));
  return g.matmul(w, src_feats);
}

Tensor feature_propagation(Graph& g, const std::vector<LevelState>& levels,
                           const std::vector<Mlp>& fp_mlps, const InterpConfig& cfg) {
  if (levels.size() < 2) throw ValidationError("feature_propagation: need at least 2 levels");
  if (fp_mlps.size() != levels.size() - 1)
    throw ConfigError("feature_propagation: " + std::to_string(fp_mlps.size()) +
                      " MLPs for " + std::to_string(levels.size() - 1) + " steps");
  Tensor f = levels.back().feats;
  const Coords* src = &levels.back().coords;
  for (std::size_t step = 0; step < fp_mlps.size(); ++step) {
    const LevelState& fine = levels[levels.size() - 2 - step];
    Tensor interp = interpolate_features(g, *src, f, fine.coords, cfg);
    f = fp_mlps[step].apply(g, g.concat({interp, fine.feats}, 1));
    src = &fine.coords;
  }
  return f;
}

Tensor encode_decode_traced(Graph& g, const ReferencePairSet& pairs,
                            const HierarchyParams& params,
                            const std::vector<LevelConfig>& levels,
                            const InterpConfig& interp, EncodeDecodeTrace* trace) {
  if (!pairs.features.defined())
    throw ValidationError("encode_decode: pair set has no features");
  if (params.levels.size() != levels.size())
    throw ConfigError("encode_decode: parameter/config level count mismatch");

  std::vector<LevelState> states;
  states.push_back({pairs.points, pairs.features});
  for (std::size_t l = 0; l < levels.size(); ++l) {
    states.push_back(set_abstraction(g, states.back(), levels[l], params.levels[l]));
    if (trace) {
      const std::size_t n = std::min(levels[l].n_points, states[states.size() - 2].count());
      trace->centroid_indices.push_back(
          farthest_point_sampling(states[states.size() - 2].coords, n, 0));
    }
  }
  if (trace) trace->level_states = states;
  return feature_propagation(g, states, params.fp_mlps, interp);
}

Tensor encode_decode(Graph& g, const ReferencePairSet& pairs, const HierarchyParams& params,
                     const std::vector<LevelConfig>& levels, const InterpConfig& interp) {
  return encode_decode_traced(g, pairs, params, levels, interp, nullptr);
}

}  // namespace strokenet
