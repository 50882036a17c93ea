#pragma once

#include <string>
#include <vector>

#include "strokenet/ink.hpp"

namespace strokenet {

// One polyline per stroke, colored by class from a fixed palette; the
// viewBox is the document bounding box. Byte-stable for identical input.
std::string export_svg(const Document& doc, const std::vector<int>& labels);

const std::vector<std::string>& svg_palette();

}  // namespace strokenet
