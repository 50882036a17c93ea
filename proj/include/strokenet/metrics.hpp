#pragma once

#include <optional>
#include <string>
#include <vector>

namespace strokenet {

// Stroke-level accuracy report over a set of documents. Classes with zero
// support have no defined accuracy and are excluded from aggregates.
struct EvalReport {
  double overall_accuracy = 0.0;
  std::vector<std::optional<double>> per_class_accuracy;
  std::vector<std::size_t> supports;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::size_t total_strokes = 0;
  std::size_t total_correct = 0;
};

using LabelSeq = std::vector<int>;

double overall_accuracy(const std::vector<LabelSeq>& preds,
                        const std::vector<LabelSeq>& truths);

std::vector<std::optional<double>> per_class_accuracy(const std::vector<LabelSeq>& preds,
                                                      const std::vector<LabelSeq>& truths,
                                                      std::size_t num_classes);

EvalReport build_eval_report(const std::vector<LabelSeq>& preds,
                             const std::vector<LabelSeq>& truths, std::size_t num_classes);

std::string report_to_json(const EvalReport& report);

}  // namespace strokenet
