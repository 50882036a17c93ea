#include "strokenet/spatial.hpp"

#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet {

double EllipseSpec::semi_axis_x() const { return radius * std::sqrt(ratio_w / ratio_h); }
double EllipseSpec::semi_axis_y() const { return radius * std::sqrt(ratio_h / ratio_w); }

bool ellipse_contains(const Point& center, const EllipseSpec& spec, const Point& p) {
  const double a = spec.semi_axis_x();
  const double b = spec.semi_axis_y();
  const double dx = (p.x - center.x) / a;
  const double dy = (p.y - center.y) / b;
  return dx * dx + dy * dy <= 1.0;
}

std::vector<std::size_t> farthest_point_sampling(const Coords& points, std::size_t n,
                                                 std::size_t seed_index) {
  const std::size_t count = points.size() / 2;
  if (n == 0 || n > count)
    throw ValidationError("farthest_point_sampling: requested " + std::to_string(n) +
                          " of " + std::to_string(count) + " points");
  if (seed_index >= count)
    throw ValidationError("farthest_point_sampling: seed index out of range");

  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  std::vector<double> min_d2(count);
  chosen.push_back(seed_index);
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = points[2 * i] - points[2 * seed_index];
    const double dy = points[2 * i + 1] - points[2 * seed_index + 1];
    min_d2[i] = dx * dx + dy * dy;
  }
  while (chosen.size() < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < count; ++i) {
      if (min_d2[i] > min_d2[best]) best = i;  // strict: ties keep the lowest index
    }
    chosen.push_back(best);
    min_d2[best] = -1.0;  // never re-selected
    for (std::size_t i = 0; i < count; ++i) {
      const double dx = points[2 * i] - points[2 * best];
      const double dy = points[2 * i + 1] - points[2 * best + 1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < min_d2[i]) min_d2[i] = d2;
    }
  }
  return chosen;
}

GroupIndex cross_ellipse_query(const Coords& points, const std::vector<std::size_t>& centroids,
                               double radius, const std::vector<RatioSpec>& ratios,
                               std::size_t k_cap) {
  const std::size_t count = points.size() / 2;
  if (ratios.empty()) throw ValidationError("cross_ellipse_query: no ratio branches");
  if (k_cap == 0) throw ValidationError("cross_ellipse_query: k_cap must be >= 1");

  GroupIndex out;
  out.num_centroids = centroids.size();
  out.num_branches = ratios.size();
  out.capacity = k_cap;
  out.neighbors.assign(centroids.size() * ratios.size() * k_cap, 0);
  out.fill.assign(centroids.size() * ratios.size(), 0);

  for (std::size_t ci = 0; ci < centroids.size(); ++ci) {
    const std::size_t cidx = centroids[ci];
    if (cidx >= count)
      throw ValidationError("cross_ellipse_query: centroid index out of range");
    const Point center = coord_at(points, cidx);
    for (std::size_t br = 0; br < ratios.size(); ++br) {
      EllipseSpec spec{radius, ratios[br].w, ratios[br].h};
      std::size_t* slot = out.neighbors.data() + (ci * ratios.size() + br) * k_cap;
      std::size_t filled = 0;
      slot[filled++] = cidx;  // centroid forced in first
      for (std::size_t i = 0; i < count && filled < k_cap; ++i) {
        if (i == cidx) continue;
        if (ellipse_contains(center, spec, coord_at(points, i))) slot[filled++] = i;
      }
      out.fill[ci * ratios.size() + br] = filled;
      for (std::size_t p = filled; p < k_cap; ++p) slot[p] = slot[0];
    }
  }
  return out;
}

}  // namespace strokenet
