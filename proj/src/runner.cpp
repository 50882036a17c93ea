#include "strokenet/runner.hpp"

#include <cmath>

#include <json.hpp>

#include "strokenet/errors.hpp"
#include "strokenet/heads.hpp"
#include "strokenet/optim.hpp"
#include "strokenet/rng.hpp"

namespace strokenet {

using ad::Graph;
using ad::Tensor;

namespace {

std::vector<int> stroke_labels(const Document& doc) {
  std::vector<int> out;
  out.reserve(doc.strokes.size());
  for (const Stroke& s : doc.strokes) {
    if (!s.label.has_value()) throw ValidationError("document '" + doc.id + "' is not labeled");
    out.push_back(*s.label);
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out;
  const std::size_t rows = logits.rows(), cols = logits.cols();
  out.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

std::vector<Document> normalize_corpus(const std::vector<Document>& corpus) {
  std::vector<Document> out;
  out.reserve(corpus.size());
  for (const Document& d : corpus) out.push_back(normalize_document(d));
  return out;
}

}  // namespace

std::string EpochLog::to_json() const {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["loss"] = mean_loss;
  j["train_accuracy"] = train_accuracy;
  if (val_accuracy.has_value()) {
    j["val_accuracy"] = *val_accuracy;
  } else {
    j["val_accuracy"] = nullptr;
  }
  j["learning_rate"] = learning_rate;
  return j.dump();
}

TrainResult train(const std::vector<Document>& train_corpus,
                  const std::vector<Document>& val_corpus, const TrainConfig& cfg,
                  std::ostream* log_stream) {
  cfg.validate();
  if (train_corpus.empty()) throw ValidationError("train: empty corpus");
  for (const Document& d : train_corpus) {
    if (!d.is_labeled()) throw ValidationError("train: document '" + d.id + "' is unlabeled");
    const auto violations = validate_document(d);
    if (!violations.empty())
      throw ValidationError("train: document '" + d.id + "' is invalid: " +
                            violations.front().detail);
  }

  const std::vector<Document> docs = normalize_corpus(train_corpus);

  TrainResult result;
  result.config = cfg;
  result.params = make_model_params(cfg);
  std::vector<Tensor> trainable = result.params.trainable();

  ad::AdamState opt;
  opt.init(trainable);

  const std::int64_t total_steps =
      static_cast<std::int64_t>(cfg.epochs) * static_cast<std::int64_t>(docs.size());
  std::int64_t global_step = 0;

  Rng shuffle_rng = Rng(cfg.rng_seed).split(1001);  // epoch shuffling substream
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0, strokes = 0, window = 0;
    double last_lr = cfg.lr0;

    for (std::size_t di = 0; di < order.size(); ++di) {
      const Document& doc = docs[order[di]];
      const std::vector<int> labels = stroke_labels(doc);
      const std::vector<int> aux = make_aux_labels(labels);

      Graph g(true);
      ModelOutput out = model_forward(g, doc, cfg, result.params);
      LossConfig loss_cfg = cfg.loss;
      loss_cfg.aux_weight = cfg.effective_aux_weight();
      Tensor loss = joint_loss(g, out.logits, labels, out.aux_logits, aux, loss_cfg);
      loss_sum += loss.item();

      const std::vector<int> preds = argmax_rows(out.logits);
      for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) ++correct;
      }
      strokes += preds.size();

      g.backward(loss);
      ++window;
      ++global_step;
      if (window == cfg.grad_accum || di + 1 == order.size()) {
        last_lr = ad::cosine_lr(global_step - 1, total_steps, cfg.lr0, cfg.lr_min);
        opt.learning_rate = last_lr;
        adam_step(opt, trainable);
        result.params.zero_grads();
        window = 0;
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(docs.size());
    entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(strokes);
    entry.learning_rate = last_lr;
    if (!val_corpus.empty()) {
      entry.val_accuracy = evaluate(val_corpus, result.params, cfg).overall_accuracy;
    }
    if (log_stream) (*log_stream) << entry.to_json() << "\n";
    result.log.push_back(entry);

    if (cfg.early_stop_train_acc > 0.0 && entry.train_accuracy >= cfg.early_stop_train_acc)
      break;
  }
  return result;
}

EvalReport evaluate(const std::vector<Document>& corpus, const ModelParams& params,
                    const TrainConfig& cfg) {
  if (corpus.empty()) throw ValidationError("evaluate: empty corpus");
  std::vector<LabelSeq> preds, truths;
  for (const Document& raw : corpus) {
    if (!raw.is_labeled())
      throw ValidationError("evaluate: document '" + raw.id + "' is unlabeled");
    const Document doc = normalize_document(raw);
    Graph g(false);
    ModelOutput out = model_forward(g, doc, cfg, params);
    preds.push_back(argmax_rows(out.logits));
    truths.push_back(stroke_labels(doc));
  }
  return build_eval_report(preds, truths, cfg.num_classes);
}

Prediction predict(const Document& raw, const ModelParams& params, const TrainConfig& cfg) {
  const Document doc = normalize_document(raw);
  Graph g(false);
  ModelOutput out = model_forward(g, doc, cfg, params);
  Prediction p;
  p.labels = argmax_rows(out.logits);
  if (out.aux_logits.defined() && out.aux_logits.rows() > 0) {
    p.transitions = argmax_rows(out.aux_logits);
  }
  return p;
}

}  // namespace strokenet
