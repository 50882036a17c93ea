#pragma once

#include <cstddef>
#include <vector>

#include "strokenet/ink.hpp"

namespace strokenet {

enum class RefStrategy {
  Dynamic,  // arc-length threshold scan plus forced start/end/centroid-closest
  Fixed,    // min(fixed_count, k) points at equal arc-length quantiles
  Total,    // every point
};

struct SelectionConfig {
  double tau = 0.075;
  RefStrategy strategy = RefStrategy::Dynamic;
  int fixed_count = 3;  // used when strategy == Fixed
};

// Strictly increasing point indices into one stroke; never empty.
struct ReferenceSelection {
  std::vector<std::size_t> indices;
};

// Euclidean distances between consecutive points; length k-1.
std::vector<double> segment_distances(const Stroke& stroke);

// Prefix sums of segment_distances with a leading 0; length k.
std::vector<double> cumulative_lengths(const Stroke& stroke);

Point stroke_centroid(const Stroke& stroke);

// Index of the point closest to the centroid, ties broken by lowest index.
std::size_t centroid_closest_index(const Stroke& stroke);

ReferenceSelection select_reference_points(const Stroke& stroke, const SelectionConfig& cfg);

std::vector<ReferenceSelection> select_reference_points(const Document& doc,
                                                        const SelectionConfig& cfg);

}  // namespace strokenet
