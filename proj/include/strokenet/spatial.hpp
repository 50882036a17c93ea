#pragma once

#include <cstddef>
#include <vector>

#include "strokenet/ink.hpp"

namespace strokenet {

// Axis-aligned elliptical search region. Semi-axes are derived from a base
// radius and a width:height ratio so that a*b = r^2 (equal area to the
// r-circle); ratio 2:2 degenerates to an exact ball query.
struct EllipseSpec {
  double radius = 0.1;
  double ratio_w = 2.0;
  double ratio_h = 2.0;

  double semi_axis_x() const;
  double semi_axis_y() const;
};

bool ellipse_contains(const Point& center, const EllipseSpec& spec, const Point& p);

// Flat (N x 2) coordinate buffer, row-major.
using Coords = std::vector<double>;

inline Point coord_at(const Coords& c, std::size_t i) { return {c[2 * i], c[2 * i + 1]}; }

// Greedy farthest point sampling: starts at seed_index, repeatedly adds the
// point with the largest distance to the chosen set, ties to the lowest
// index. Returns n point indices, deterministic.
std::vector<std::size_t> farthest_point_sampling(const Coords& points, std::size_t n,
                                                 std::size_t seed_index = 0);

// Fixed-capacity neighbor lists per centroid per ratio branch. Lists start
// with the centroid itself, then admit passing points in index order; short
// lists are padded by repeating the first entry, with `fill` recording true
// membership.
struct GroupIndex {
  std::size_t num_centroids = 0;
  std::size_t num_branches = 0;
  std::size_t capacity = 0;
  std::vector<std::size_t> neighbors;  // num_centroids * num_branches * capacity
  std::vector<std::size_t> fill;       // num_centroids * num_branches

  std::size_t neighbor(std::size_t centroid, std::size_t branch, std::size_t slot) const {
    return neighbors[(centroid * num_branches + branch) * capacity + slot];
  }
  std::size_t fill_count(std::size_t centroid, std::size_t branch) const {
    return fill[centroid * num_branches + branch];
  }
};

struct RatioSpec {
  double w = 2.0;
  double h = 2.0;
};

GroupIndex cross_ellipse_query(const Coords& points, const std::vector<std::size_t>& centroids,
                               double radius, const std::vector<RatioSpec>& ratios,
                               std::size_t k_cap);

}  // namespace strokenet
