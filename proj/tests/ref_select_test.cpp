#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "strokenet/ref_select.hpp"
#include "strokenet/rng.hpp"

using namespace strokenet;

namespace {

Stroke stroke_of(std::vector<Point> pts) {
  Stroke s;
  s.points = std::move(pts);
  return s;
}

// Independent replay of the dynamic rule, written directly from the
// definition: prefix arc lengths, threshold scan from the second point,
// forced end point and centroid-closest point.
std::vector<std::size_t> dynamic_oracle(const Stroke& s, double tau) {
  const std::size_t k = s.points.size();
  std::vector<double> length(k, 0.0);
  for (std::size_t i = 1; i < k; ++i) {
    const double dx = s.points[i].x - s.points[i - 1].x;
    const double dy = s.points[i].y - s.points[i - 1].y;
    length[i] = length[i - 1] + std::sqrt(dx * dx + dy * dy);
  }
  std::vector<std::size_t> sel = {0};
  std::size_t last = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (length[i] - length[last] >= tau) {
      sel.push_back(i);
      last = i;
    }
  }
  double cx = 0, cy = 0;
  for (const Point& p : s.points) {
    cx += p.x;
    cy += p.y;
  }
  cx /= k;
  cy /= k;
  std::size_t nearest = 0;
  double best = (s.points[0].x - cx) * (s.points[0].x - cx) +
                (s.points[0].y - cy) * (s.points[0].y - cy);
  for (std::size_t i = 1; i < k; ++i) {
    const double d = (s.points[i].x - cx) * (s.points[i].x - cx) +
                     (s.points[i].y - cy) * (s.points[i].y - cy);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  sel.push_back(k - 1);
  sel.push_back(nearest);
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
  return sel;
}

Stroke random_stroke(Rng& rng) {
  const std::size_t k = 1 + rng.next_below(40);
  Stroke s;
  double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < k; ++i) {
    s.points.push_back({x, y});
    x += rng.uniform(-0.08, 0.08);
    y += rng.uniform(-0.08, 0.08);
  }
  return s;
}

}  // namespace

TEST_CASE("segment distances") {
  CHECK(segment_distances(stroke_of({{0, 0}, {3, 4}})) == std::vector<double>{5.0});
  CHECK(segment_distances(stroke_of({{0, 0}, {0, 0}})) == std::vector<double>{0.0});
  CHECK(segment_distances(stroke_of({{0, 0}, {1, 0}, {1, 1}})) ==
        std::vector<double>{1.0, 1.0});
  CHECK(segment_distances(stroke_of({{2, 2}})).empty());
}

TEST_CASE("cumulative lengths") {
  CHECK(cumulative_lengths(stroke_of({{0, 0}, {3, 4}, {3, 4}})) ==
        std::vector<double>{0.0, 5.0, 5.0});
  CHECK(cumulative_lengths(stroke_of({{1, 1}})) == std::vector<double>{0.0});
  CHECK(cumulative_lengths(stroke_of({{0, 0}, {1, 0}, {2, 0}})) ==
        std::vector<double>{0.0, 1.0, 2.0});
}

TEST_CASE("stroke centroid") {
  Point c = stroke_centroid(stroke_of({{0, 0}, {2, 0}}));
  CHECK(c.x == doctest::Approx(1.0));
  CHECK(c.y == doctest::Approx(0.0));
  c = stroke_centroid(stroke_of({{0.3, -0.7}}));
  CHECK(c.x == doctest::Approx(0.3));
  CHECK(c.y == doctest::Approx(-0.7));
  c = stroke_centroid(stroke_of({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  CHECK(c.x == doctest::Approx(0.5));
  CHECK(c.y == doctest::Approx(0.5));
}

TEST_CASE("dynamic selection matches the hand-traced example") {
  Stroke s = stroke_of({{0, 0}, {0.05, 0}, {0.10, 0}, {0.15, 0}, {0.20, 0}});
  SelectionConfig cfg;
  cfg.tau = 0.075;
  auto sel = select_reference_points(s, cfg);
  CHECK(sel.indices == std::vector<std::size_t>{0, 2, 4});
}

TEST_CASE("two-point stroke selects both endpoints") {
  SelectionConfig cfg;
  auto sel = select_reference_points(stroke_of({{0, 0}, {0.01, 0}}), cfg);
  CHECK(sel.indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("total strategy selects every index") {
  SelectionConfig cfg;
  cfg.strategy = RefStrategy::Total;
  auto sel = select_reference_points(stroke_of({{0, 0}, {1, 0}, {2, 0}}), cfg);
  CHECK(sel.indices == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("fixed strategy picks exactly min(n, k) indices with forced endpoints") {
  SelectionConfig cfg;
  cfg.strategy = RefStrategy::Fixed;
  Rng rng(5150);
  for (int n : {1, 3, 5, 7}) {
    cfg.fixed_count = n;
    for (int rep = 0; rep < 50; ++rep) {
      Stroke s = random_stroke(rng);
      auto sel = select_reference_points(s, cfg);
      const std::size_t k = s.points.size();
      CHECK(sel.indices.size() == std::min<std::size_t>(n, k));
      CHECK(std::is_sorted(sel.indices.begin(), sel.indices.end()));
      CHECK(std::adjacent_find(sel.indices.begin(), sel.indices.end()) == sel.indices.end());
      CHECK(sel.indices.front() == 0);
      if (k >= 2 && static_cast<std::size_t>(n) >= 2) CHECK(sel.indices.back() == k - 1);
    }
  }
}

TEST_CASE("fixed strategy stays defined on a zero-length stroke") {
  SelectionConfig cfg;
  cfg.strategy = RefStrategy::Fixed;
  cfg.fixed_count = 5;
  Stroke s = stroke_of({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}});
  auto sel = select_reference_points(s, cfg);
  CHECK(sel.indices.size() == 5);
  CHECK(std::is_sorted(sel.indices.begin(), sel.indices.end()));
}

TEST_CASE("dynamic selection equals the oracle on 1000 random strokes") {
  Rng rng(0xabcdef);
  SelectionConfig cfg;
  cfg.tau = 0.075;
  for (int rep = 0; rep < 1000; ++rep) {
    Stroke s = random_stroke(rng);
    auto sel = select_reference_points(s, cfg);
    auto expect = dynamic_oracle(s, cfg.tau);
    REQUIRE(sel.indices == expect);
    // forced members
    CHECK(std::binary_search(sel.indices.begin(), sel.indices.end(), std::size_t{0}));
    CHECK(std::binary_search(sel.indices.begin(), sel.indices.end(), s.points.size() - 1));
    CHECK(std::binary_search(sel.indices.begin(), sel.indices.end(),
                             centroid_closest_index(s)));
    CHECK(sel.indices.size() <= s.points.size());
  }
}

TEST_CASE("threshold gap holds between consecutive scan-selected indices") {
  Rng rng(31337);
  SelectionConfig cfg;
  cfg.tau = 0.075;
  for (int rep = 0; rep < 200; ++rep) {
    Stroke s = random_stroke(rng);
    if (s.points.size() < 2) continue;
    const auto cum = cumulative_lengths(s);
    // Replay the scan alone (no forced insertions) and verify the gap rule.
    std::vector<std::size_t> scan = {0};
    std::size_t last = 0;
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      if (cum[i] - cum[last] >= cfg.tau) {
        scan.push_back(i);
        last = i;
      }
    }
    for (std::size_t i = 1; i < scan.size(); ++i) {
      CHECK(cum[scan[i]] - cum[scan[i - 1]] >= cfg.tau);
    }
    // and every scan pick appears in the final selection
    auto sel = select_reference_points(s, cfg);
    for (std::size_t idx : scan) {
      CHECK(std::binary_search(sel.indices.begin(), sel.indices.end(), idx));
    }
  }
}
