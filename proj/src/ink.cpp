#include "strokenet/ink.hpp"

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet {

std::size_t Document::point_count() const {
  std::size_t n = 0;
  for (const auto& s : strokes) n += s.points.size();
  return n;
}

bool Document::is_labeled() const {
  if (strokes.empty()) return false;
  for (const auto& s : strokes) {
    if (!s.label.has_value()) return false;
  }
  return true;
}

const char* violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyDocument: return "EmptyDocument";
    case ViolationKind::EmptyStroke: return "EmptyStroke";
    case ViolationKind::LabelOutOfRange: return "LabelOutOfRange";
    case ViolationKind::MixedLabeling: return "MixedLabeling";
    case ViolationKind::NonFiniteCoordinate: return "NonFiniteCoordinate";
  }
  return "Unknown";
}

std::vector<Violation> validate_document(const Document& doc) {
  std::vector<Violation> out;
  if (doc.strokes.empty()) {
    out.push_back({ViolationKind::EmptyDocument, 0, "document has no strokes"});
    return out;
  }
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < doc.strokes.size(); ++i) {
    const Stroke& s = doc.strokes[i];
    if (s.points.empty()) {
      out.push_back({ViolationKind::EmptyStroke, i, "stroke has no points"});
    }
    for (const Point& p : s.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        out.push_back({ViolationKind::NonFiniteCoordinate, i, "non-finite coordinate"});
        break;
      }
    }
    if (s.label.has_value()) {
      ++labeled;
      if (*s.label < 0 || *s.label >= doc.num_classes) {
        out.push_back({ViolationKind::LabelOutOfRange, i,
                       "label " + std::to_string(*s.label) + " outside [0, " +
                           std::to_string(doc.num_classes) + ")"});
      }
    }
  }
  if (labeled != 0 && labeled != doc.strokes.size()) {
    out.push_back({ViolationKind::MixedLabeling, 0,
                   "labels present on some strokes but not all"});
  }
  return out;
}

BoundingBox document_bbox(const Document& doc) {
  BoundingBox box;
  bool first = true;
  for (const auto& s : doc.strokes) {
    for (const Point& p : s.points) {
      if (first) {
        box = {p.x, p.y, p.x, p.y};
        first = false;
      } else {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
      }
    }
  }
  return box;
}

Document normalize_document(const Document& doc) {
  if (doc.point_count() == 0) {
    throw ValidationError("normalize_document: document has no points");
  }
  BoundingBox box = document_bbox(doc);
  const double cx = 0.5 * (box.min_x + box.max_x);
  const double cy = 0.5 * (box.min_y + box.max_y);
  const double extent = std::max(box.width(), box.height());
  const double scale = extent > 0.0 ? 2.0 / extent : 0.0;

  Document out = doc;
  for (auto& s : out.strokes) {
    for (Point& p : s.points) {
      p.x = (p.x - cx) * scale;
      p.y = (p.y - cy) * scale;
    }
  }
  return out;
}

}  // namespace strokenet
