#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace strokenet {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// One pen-down-to-pen-up trajectory. `label` is a class id in [0, num_classes)
// on labeled documents and absent on inference input.
struct Stroke {
  std::vector<Point> points;
  std::optional<int> label;
};

// Ordered sequence of strokes in writing order.
struct Document {
  std::vector<Stroke> strokes;
  std::string id;
  int num_classes = 0;

  std::size_t stroke_count() const { return strokes.size(); }
  std::size_t point_count() const;
  bool is_labeled() const;
};

enum class ViolationKind {
  EmptyDocument,
  EmptyStroke,
  LabelOutOfRange,
  MixedLabeling,
  NonFiniteCoordinate,
};

struct Violation {
  ViolationKind kind;
  std::size_t stroke_index = 0;  // meaningless for EmptyDocument / MixedLabeling
  std::string detail;
};

const char* violation_kind_name(ViolationKind kind);

// Empty result iff every type invariant holds. Violations are data, not
// failures: callers decide whether to reject.
std::vector<Violation> validate_document(const Document& doc);

// Affine, aspect-ratio-preserving map centering the bounding box at the
// origin and scaling the longer side to [-1, 1]. A zero-extent bounding box
// collapses every point to the origin.
Document normalize_document(const Document& doc);

struct BoundingBox {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

BoundingBox document_bbox(const Document& doc);

}  // namespace strokenet
