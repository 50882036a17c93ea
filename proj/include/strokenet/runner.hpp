#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "strokenet/config.hpp"
#include "strokenet/metrics.hpp"
#include "strokenet/model.hpp"

namespace strokenet {

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
  double learning_rate = 0.0;

  std::string to_json() const;  // one line, no trailing newline
};

struct TrainResult {
  ModelParams params;
  TrainConfig config;
  std::vector<EpochLog> log;
};

// One optimization step per document (grad_accum widens the window), Adam on
// a cosine-annealed learning rate. Deterministic given (corpus, config):
// document order is reshuffled per epoch from the config seed. When
// `log_stream` is set, one JSON object per epoch is written to it.
TrainResult train(const std::vector<Document>& train_corpus,
                  const std::vector<Document>& val_corpus, const TrainConfig& cfg,
                  std::ostream* log_stream = nullptr);

EvalReport evaluate(const std::vector<Document>& corpus, const ModelParams& params,
                    const TrainConfig& cfg);

struct Prediction {
  std::vector<int> labels;       // argmax class per stroke
  std::vector<int> transitions;  // aux head diagnostics, length M-1, never fused
};

Prediction predict(const Document& doc, const ModelParams& params, const TrainConfig& cfg);

}  // namespace strokenet
