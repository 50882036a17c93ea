#include "strokenet/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "strokenet/errors.hpp"
#include "strokenet/rng.hpp"

namespace strokenet {

using nlohmann::json;

GeneratorKind generator_kind_from_name(const std::string& name) {
  if (name == "text-row") return GeneratorKind::TextRow;
  if (name == "table-grid") return GeneratorKind::TableGrid;
  if (name == "figure-blob") return GeneratorKind::FigureBlob;
  throw ValidationError("unknown generator kind '" + name + "'");
}

const char* generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::TextRow: return "text-row";
    case GeneratorKind::TableGrid: return "table-grid";
    case GeneratorKind::FigureBlob: return "figure-blob";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

double quantize6(double v) { return std::round(v * 1e6) / 1e6; }

void append_coord(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  out += buf;
}

double read_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  return j.get<double>();
}

}  // namespace

std::string write_document(const Document& doc) {
  std::string out;
  out.reserve(64 + doc.point_count() * 22);
  out += "{\"id\":";
  out += json(doc.id).dump();  // proper string escaping
  out += ",\"num_classes\":";
  out += std::to_string(doc.num_classes);
  out += ",\"strokes\":[";
  for (std::size_t i = 0; i < doc.strokes.size(); ++i) {
    const Stroke& s = doc.strokes[i];
    if (i) out += ',';
    out += '{';
    if (s.label.has_value()) {
      out += "\"label\":";
      out += std::to_string(*s.label);
      out += ',';
    }
    out += "\"points\":[";
    for (std::size_t p = 0; p < s.points.size(); ++p) {
      if (p) out += ',';
      out += '[';
      append_coord(out, s.points[p].x);
      out += ',';
      append_coord(out, s.points[p].y);
      out += ']';
    }
    out += "]}";
  }
  out += "]}";
  return out;
}

Document parse_document(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("parse error: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ValidationError("document: expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string())
    throw ValidationError("document: missing or non-string field 'id'");
  if (!j.contains("num_classes") || !j["num_classes"].is_number_integer())
    throw ValidationError("document: missing or non-integer field 'num_classes'");
  if (!j.contains("strokes") || !j["strokes"].is_array())
    throw ValidationError("document: missing or non-array field 'strokes'");

  Document doc;
  doc.id = j["id"].get<std::string>();
  doc.num_classes = j["num_classes"].get<int>();
  const json& strokes = j["strokes"];
  doc.strokes.reserve(strokes.size());
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    const json& js = strokes[i];
    const std::string where = "strokes[" + std::to_string(i) + "]";
    if (!js.is_object()) throw ValidationError(where + ": expected an object");
    Stroke s;
    if (js.contains("label")) {
      if (!js["label"].is_number_integer())
        throw ValidationError(where + ".label: expected an integer");
      s.label = js["label"].get<int>();
    }
    if (!js.contains("points") || !js["points"].is_array())
      throw ValidationError(where + ": missing or non-array field 'points'");
    const json& pts = js["points"];
    s.points.reserve(pts.size());
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const json& jp = pts[p];
      const std::string pw = where + ".points[" + std::to_string(p) + "]";
      if (!jp.is_array() || jp.size() != 2)
        throw ValidationError(pw + ": expected an [x, y] pair");
      s.points.push_back({read_number(jp[0], pw), read_number(jp[1], pw)});
    }
    doc.strokes.push_back(std::move(s));
  }
  return doc;
}

Document load_document_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

void save_document_file(const Document& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << write_document(doc);
  if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Synthetic corpus generator
//
// Strokes are drawn on a [0,1] x [0,1] canvas; normalization later maps the
// document bounding box to [-1,1]. Geometry is tuned so that dynamic
// reference selection at tau = 0.075 lands in the 3-10 points-per-stroke band
// for nearly all strokes (see the regression test).
// ---------------------------------------------------------------------------

namespace {

Point jittered(Rng& rng, double x, double y, double jitter) {
  return {x + rng.normal(0.0, jitter), y + rng.normal(0.0, jitter)};
}

Stroke line_stroke(Rng& rng, Point a, Point b, std::size_t np, double jitter, int label) {
  Stroke s;
  s.label = label;
  s.points.reserve(np);
  for (std::size_t i = 0; i < np; ++i) {
    double t = np == 1 ? 0.0 : static_cast<double>(i) / (np - 1);
    s.points.push_back(jittered(rng, a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, jitter));
  }
  return s;
}

// A handful of short strokes along one baseline. Roughly a quarter are plain
// dashes whose local geometry matches table tick marks, so class identity
// there depends on surrounding context.
std::vector<Stroke> text_row_block(Rng& rng, double jitter, int label) {
  std::vector<Stroke> out;
  const double y0 = rng.uniform(0.08, 0.92);
  double x = rng.uniform(0.05, 0.45);
  const std::size_t chars = 4 + rng.next_below(4);
  for (std::size_t c = 0; c < chars && x < 0.93; ++c) {
    const double w = rng.uniform(0.035, 0.06);
    if (rng.next_double() < 0.33) {
      const std::size_t np = 6 + rng.next_below(4);
      out.push_back(line_stroke(rng, {x, y0}, {x + w, y0}, np, jitter, label));
    } else {
      Stroke s;
      s.label = label;
      const std::size_t np = 7 + rng.next_below(5);
      const double amp = rng.uniform(0.010, 0.020);
      const double freq = rng.uniform(1.5, 2.5);
      const double phase = rng.uniform(0.0, 6.28);
      for (std::size_t i = 0; i < np; ++i) {
        const double t = static_cast<double>(i) / (np - 1);
        s.points.push_back(jittered(rng, x + w * t,
                                    y0 + amp * std::sin(6.283185307179586 * freq * t + phase),
                                    jitter));
      }
      out.push_back(std::move(s));
    }
    x += w + rng.uniform(0.012, 0.02);
  }
  return out;
}

// Axis-aligned lattice plus a few in-cell tick marks.
std::vector<Stroke> table_grid_block(Rng& rng, double jitter, int label) {
  std::vector<Stroke> out;
  const double gw = rng.uniform(0.22, 0.32);
  const double gh = rng.uniform(0.20, 0.30);
  const double gx = rng.uniform(0.05, 0.95 - gw);
  const double gy = rng.uniform(0.05, 0.95 - gh);
  const std::size_t rows = 2 + rng.next_below(2);
  const std::size_t cols = 2 + rng.next_below(2);
  for (std::size_t r = 0; r <= rows; ++r) {
    const double y = gy + gh * r / rows;
    const std::size_t np = 10 + rng.next_below(6);
    out.push_back(line_stroke(rng, {gx, y}, {gx + gw, y}, np, jitter, label));
  }
  for (std::size_t c = 0; c <= cols; ++c) {
    const double x = gx + gw * c / cols;
    const std::size_t np = 10 + rng.next_below(6);
    out.push_back(line_stroke(rng, {x, gy}, {x, gy + gh}, np, jitter, label));
  }
  const std::size_t ticks = 2 + rng.next_below(3);
  for (std::size_t t = 0; t < ticks; ++t) {
    const double cxm = gx + gw * (0.2 + 0.6 * rng.next_double());
    const double cym = gy + gh * (0.2 + 0.6 * rng.next_double());
    const double w = rng.uniform(0.04, 0.06);
    const std::size_t np = 6 + rng.next_below(4);
    out.push_back(line_stroke(rng, {cxm - w / 2, cym}, {cxm + w / 2, cym}, np, jitter, label));
  }
  return out;
}

std::vector<Stroke> figure_blob_block(Rng& rng, double jitter, int label) {
  std::vector<Stroke> out;
  const std::size_t blobs = 1 + rng.next_below(2);
  for (std::size_t b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0.10, 0.90);
    const double cy = rng.uniform(0.10, 0.90);
    const double rx = rng.uniform(0.030, 0.050);
    const double ry = rng.uniform(0.030, 0.050);
    const double rot = rng.uniform(0.0, 3.14159);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const std::size_t np = 14 + rng.next_below(7);
    Stroke s;
    s.label = label;
    for (std::size_t i = 0; i <= np; ++i) {
      const double t = 6.283185307179586 * i / np;
      const double ex = rx * std::cos(t), ey = ry * std::sin(t);
      s.points.push_back(jittered(rng, cx + cr * ex - sr * ey, cy + sr * ex + cr * ey, jitter));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Stroke> make_block(Rng& rng, GeneratorKind kind, double jitter, int label) {
  switch (kind) {
    case GeneratorKind::TextRow: return text_row_block(rng, jitter, label);
    case GeneratorKind::TableGrid: return table_grid_block(rng, jitter, label);
    case GeneratorKind::FigureBlob: return figure_blob_block(rng, jitter, label);
  }
  return {};
}

}  // namespace

Document generate_document(const CorpusSpec& spec, std::size_t index) {
  if (spec.classes.empty()) throw ValidationError("CorpusSpec.classes is empty");
  if (spec.min_strokes_per_doc == 0 || spec.max_strokes_per_doc < spec.min_strokes_per_doc)
    throw ValidationError("CorpusSpec strokes_per_doc range is empty");

  Rng rng = Rng(spec.rng_seed).split(index);
  const std::size_t target =
      spec.min_strokes_per_doc +
      rng.next_below(spec.max_strokes_per_doc - spec.min_strokes_per_doc + 1);

  // Build blocks class by class, always extending the most under-represented
  // class, then shuffle block order so transitions land between blocks.
  std::vector<std::size_t> counts(spec.classes.size(), 0);
  std::vector<std::vector<Stroke>> blocks;
  std::size_t total = 0;
  while (total < target) {
    std::size_t cls = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
      if (counts[c] < counts[cls]) cls = c;
    }
    auto block = make_block(rng, spec.classes[cls], spec.jitter, static_cast<int>(cls));
    counts[cls] += block.size();
    total += block.size();
    blocks.push_back(std::move(block));
  }
  rng.shuffle(blocks);

  Document doc;
  doc.num_classes = static_cast<int>(spec.classes.size());
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "synthetic-%06zu", index);
  doc.id = idbuf;
  for (auto& block : blocks) {
    for (auto& s : block) doc.strokes.push_back(std::move(s));
  }
  for (auto& s : doc.strokes) {
    for (Point& p : s.points) {
      p.x = quantize6(p.x);
      p.y = quantize6(p.y);
    }
  }
  return doc;
}

std::vector<Document> generate_corpus(const CorpusSpec& spec) {
  if (spec.num_documents == 0) throw ValidationError("CorpusSpec.num_documents must be >= 1");
  std::vector<Document> out;
  out.reserve(spec.num_documents);
  for (std::size_t i = 0; i < spec.num_documents; ++i) {
    out.push_back(generate_document(spec, i));
  }
  return out;
}

}  // namespace strokenet
