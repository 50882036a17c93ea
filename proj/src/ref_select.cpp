#include "strokenet/ref_select.hpp"

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet {

std::vector<double> segment_distances(const Stroke& stroke) {
  if (stroke.points.empty()) throw ValidationError("segment_distances: empty stroke");
  std::vector<double> d;
  d.reserve(stroke.points.size() - 1);
  for (std::size_t i = 0; i + 1 < stroke.points.size(); ++i) {
    const double dx = stroke.points[i + 1].x - stroke.points[i].x;
    const double dy = stroke.points[i + 1].y - stroke.points[i].y;
    d.push_back(std::sqrt(dx * dx + dy * dy));
  }
  return d;
}

std::vector<double> cumulative_lengths(const Stroke& stroke) {
  const std::vector<double> d = segment_distances(stroke);
  std::vector<double> cum(stroke.points.size());
  cum[0] = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) cum[i + 1] = cum[i] + d[i];
  return cum;
}

Point stroke_centroid(const Stroke& stroke) {
  if (stroke.points.empty()) throw ValidationError("stroke_centroid: empty stroke");
  double sx = 0.0, sy = 0.0;
  for (const Point& p : stroke.points) {
    sx += p.x;
    sy += p.y;
  }
  const double k = static_cast<double>(stroke.points.size());
  return {sx / k, sy / k};
}

std::size_t centroid_closest_index(const Stroke& stroke) {
  const Point c = stroke_centroid(stroke);
  std::size_t best = 0;
  double best_d2 = -1.0;
  for (std::size_t i = 0; i < stroke.points.size(); ++i) {
    const double dx = stroke.points[i].x - c.x;
    const double dy = stroke.points[i].y - c.y;
    const double d2 = dx * dx + dy * dy;
    if (best_d2 < 0.0 || d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

namespace {

void insert_sorted_unique(std::vector<std::size_t>& v, std::size_t x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}

ReferenceSelection select_dynamic(const Stroke& stroke, double tau) {
  const std::size_t k = stroke.points.size();
  const std::vector<double> cum = cumulative_lengths(stroke);

  std::vector<std::size_t> sel;
  sel.push_back(0);
  std::size_t last = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (cum[i] - cum[last] >= tau) {
      sel.push_back(i);
      last = i;
    }
  }
  // Forced insertions are exempt from the tau-gap rule.
  insert_sorted_unique(sel, k - 1);
  insert_sorted_unique(sel, centroid_closest_index(stroke));
  return {std::move(sel)};
}

ReferenceSelection select_fixed(const Stroke& stroke, int n) {
  const std::size_t k = stroke.points.size();
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(n), k);
  if (want == 0) throw ValidationError("select_reference_points: fixed count must be >= 1");
  if (want >= k) {
    std::vector<std::size_t> all(k);
    for (std::size_t i = 0; i < k; ++i) all[i] = i;
    return {std::move(all)};
  }

  const std::vector<double> cum = cumulative_lengths(stroke);
  std::vector<bool> used(k, false);
  std::vector<std::size_t> sel;
  sel.push_back(0);
  used[0] = true;
  if (k >= 2 && want >= 2) {
    sel.push_back(k - 1);
    used[k - 1] = true;
  }
  // Interior picks at equal arc-length quantiles. Each target takes the
  // nearest not-yet-used index so the selection always has exactly
  // min(n, k) entries, even on degenerate zero-length strokes.
  const double total = cum.back();
  for (std::size_t j = 1; sel.size() < want; ++j) {
    const double target = total * static_cast<double>(j) / (want - 1);
    std::size_t best = k;  // sentinel
    double best_err = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (used[i]) continue;
      const double err = std::abs(cum[i] - target);
      if (best == k || err < best_err) {
        best = i;
        best_err = err;
      }
    }
    sel.push_back(best);
    used[best] = true;
  }
  std::sort(sel.begin(), sel.end());
  return {std::move(sel)};
}

}  // namespace

ReferenceSelection select_reference_points(const Stroke& stroke, const SelectionConfig& cfg) {
  if (stroke.points.empty())
    throw ValidationError("select_reference_points: empty stroke");
  switch (cfg.strategy) {
    case RefStrategy::Dynamic:
      if (cfg.tau <= 0.0) throw ValidationError("select_reference_points: tau must be > 0");
      return select_dynamic(stroke, cfg.tau);
    case RefStrategy::Fixed:
      return select_fixed(stroke, cfg.fixed_count);
    case RefStrategy::Total: {
      std::vector<std::size_t> all(stroke.points.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      return {std::move(all)};
    }
  }
  throw ValidationError("select_reference_points: unknown strategy");
}

std::vector<ReferenceSelection> select_reference_points(const Document& doc,
                                                        const SelectionConfig& cfg) {
  std::vector<ReferenceSelection> out;
  out.reserve(doc.strokes.size());
  for (const Stroke& s : doc.strokes) out.push_back(select_reference_points(s, cfg));
  return out;
}

}  // namespace strokenet
