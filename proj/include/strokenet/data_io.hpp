#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strokenet/ink.hpp"

namespace strokenet {

// Stroke generator kinds for the synthetic corpus. The class id of a stroke
// is the index of its generator in CorpusSpec::classes.
enum class GeneratorKind {
  TextRow,     // many short jittered strokes along horizontal baselines
  TableGrid,   // few long axis-aligned line strokes forming a lattice
  FigureBlob,  // closed curve strokes
};

GeneratorKind generator_kind_from_name(const std::string& name);
const char* generator_kind_name(GeneratorKind kind);

struct CorpusSpec {
  std::size_t num_documents = 1;
  std::vector<GeneratorKind> classes = {GeneratorKind::TextRow,
                                        GeneratorKind::TableGrid,
                                        GeneratorKind::FigureBlob};
  std::size_t min_strokes_per_doc = 24;
  std::size_t max_strokes_per_doc = 48;
  double jitter = 0.002;
  std::uint64_t rng_seed = 1;
};

// File format: one document per file, UTF-8 JSON
//   {"id": "...", "num_classes": T, "strokes": [{"label": 0, "points": [[x,y],...]}, ...]}
// "label" is omitted on unlabeled strokes. Unknown fields are ignored on read
// and never emitted on write; write_document is canonical (sorted keys, fixed
// 6-decimal coordinates), so write . parse . write is byte-stable.
Document parse_document(const std::string& bytes);
std::string write_document(const Document& doc);

Document load_document_file(const std::string& path);
void save_document_file(const Document& doc, const std::string& path);

// Deterministic given spec.rng_seed; document i draws from an independent
// substream so generation order does not matter.
std::vector<Document> generate_corpus(const CorpusSpec& spec);
Document generate_document(const CorpusSpec& spec, std::size_t index);

}  // namespace strokenet
