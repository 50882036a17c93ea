#include "strokenet/svg.hpp"

#include <cstdio>

#include "strokenet/errors.hpp"

namespace strokenet {

const std::vector<std::string>& svg_palette() {
  static const std::vector<std::string> palette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
      "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a",
  };
  return palette;
}

std::string export_svg(const Document& doc, const std::vector<int>& labels) {
  if (labels.size() != doc.strokes.size())
    throw ValidationError("export_svg: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(doc.strokes.size()) + " strokes");
  if (doc.point_count() == 0) throw ValidationError("export_svg: document has no points");

  const BoundingBox box = document_bbox(doc);
  const double margin = 0.05 * std::max(std::max(box.width(), box.height()), 1e-6);
  char buf[160];
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.4f %.4f %.4f %.4f\">\n",
                box.min_x - margin, box.min_y - margin, box.width() + 2 * margin,
                box.height() + 2 * margin);
  out += buf;
  const auto& palette = svg_palette();
  const double stroke_width = 0.008 * std::max(box.width() + 2 * margin, box.height() + 2 * margin);
  for (std::size_t i = 0; i < doc.strokes.size(); ++i) {
    const int label = labels[i];
    if (label < 0) throw ValidationError("export_svg: negative class id");
    const std::string& color = palette[static_cast<std::size_t>(label) % palette.size()];
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"";
    std::snprintf(buf, sizeof(buf), "%.5f", stroke_width);
    out += buf;
    out += "\" points=\"";
    for (std::size_t p = 0; p < doc.strokes[i].points.size(); ++p) {
      if (p) out += ' ';
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f", doc.strokes[i].points[p].x,
                    doc.strokes[i].points[p].y);
      out += buf;
    }
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace strokenet
