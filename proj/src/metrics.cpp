#include "strokenet/metrics.hpp"

#include <json.hpp>

#include "strokenet/errors.hpp"

namespace strokenet {

namespace {

void check_aligned(const std::vector<LabelSeq>& preds, const std::vector<LabelSeq>& truths) {
  if (preds.empty()) throw ValidationError("metrics: no documents");
  if (preds.size() != truths.size())
    throw ValidationError("metrics: " + std::to_string(preds.size()) + " prediction lists for " +
                          std::to_string(truths.size()) + " truth lists");
  for (std::size_t u = 0; u < preds.size(); ++u) {
    if (preds[u].size() != truths[u].size())
      throw ValidationError("metrics: length mismatch in document " + std::to_string(u));
  }
}

}  // namespace

EvalReport build_eval_report(const std::vector<LabelSeq>& preds,
                             const std::vector<LabelSeq>& truths, std::size_t num_classes) {
  check_aligned(preds, truths);
  EvalReport r;
  r.supports.assign(num_classes, 0);
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t u = 0; u < preds.size(); ++u) {
    for (std::size_t m = 0; m < preds[u].size(); ++m) {
      const int truth = truths[u][m];
      const int pred = preds[u][m];
      if (truth < 0 || static_cast<std::size_t>(truth) >= num_classes ||
          pred < 0 || static_cast<std::size_t>(pred) >= num_classes)
        throw ValidationError("metrics: label outside [0, " + std::to_string(num_classes) + ")");
      ++r.total_strokes;
      ++r.supports[truth];
      ++r.confusion[truth][pred];
      if (truth == pred) ++r.total_correct;
    }
  }
  r.overall_accuracy =
      static_cast<double>(r.total_correct) / static_cast<double>(r.total_strokes);
  r.per_class_accuracy.resize(num_classes);
  for (std::size_t t = 0; t < num_classes; ++t) {
    if (r.supports[t] == 0) {
      r.per_class_accuracy[t] = std::nullopt;  // 0/0 left undefined
    } else {
      r.per_class_accuracy[t] =
          static_cast<double>(r.confusion[t][t]) / static_cast<double>(r.supports[t]);
    }
  }
  return r;
}

double overall_accuracy(const std::vector<LabelSeq>& preds,
                        const std::vector<LabelSeq>& truths) {
  check_aligned(preds, truths);
  std::size_t correct = 0, total = 0;
  for (std::size_t u = 0; u < preds.size(); ++u) {
    for (std::size_t m = 0; m < preds[u].size(); ++m) {
      ++total;
      if (preds[u][m] == truths[u][m]) ++correct;
    }
  }
  if (total == 0) throw ValidationError("metrics: no strokes");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<std::optional<double>> per_class_accuracy(const std::vector<LabelSeq>& preds,
                                                      const std::vector<LabelSeq>& truths,
                                                      std::size_t num_classes) {
  return build_eval_report(preds, truths, num_classes).per_class_accuracy;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["overall_accuracy"] = report.overall_accuracy;
  j["total_strokes"] = report.total_strokes;
  j["total_correct"] = report.total_correct;
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& acc : report.per_class_accuracy) {
    if (acc.has_value()) {
      per_class.push_back(*acc);
    } else {
      per_class.push_back(nullptr);
    }
  }
  j["per_class_accuracy"] = per_class;
  j["supports"] = report.supports;
  j["confusion"] = report.confusion;
  return j.dump(2);
}

}  // namespace strokenet
