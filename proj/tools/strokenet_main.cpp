#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strokenet/data_io.hpp"
#include "strokenet/errors.hpp"
#include "strokenet/metrics.hpp"
#include "strokenet/model.hpp"
#include "strokenet/runner.hpp"
#include "strokenet/svg.hpp"

namespace fs = std::filesystem;
using namespace strokenet;

namespace {

std::vector<Document> load_split(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) docs.push_back(load_document_file(f.string()));
  if (docs.empty()) throw Error("no .json documents in " + dir.string());
  return docs;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << bytes;
  if (!out) throw Error("failed writing '" + path + "'");
}

// CLI flags funnel into a JSON override object so the CLI and --config files
// share one parsing and validation path.
struct ConfigFlags {
  nlohmann::json overrides = nlohmann::json::object();
  std::string config_file;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON file with TrainConfig overrides");
    auto num = [this, cmd](const std::string& name, const std::string& help) {
      cmd->add_option_function<double>(
          "--" + name, [this, name](double v) { overrides[name] = v; }, help);
    };
    auto integer = [this, cmd](const std::string& name, const std::string& help) {
      cmd->add_option_function<long long>(
          "--" + name, [this, name](long long v) { overrides[name] = v; }, help);
    };
    auto flag = [this, cmd](const std::string& name, const std::string& help) {
      cmd->add_flag_function(
          "--" + name, [this, name](std::int64_t count) { overrides[name] = count > 0; }, help);
    };
    num("tau", "arc-length threshold for dynamic selection");
    cmd->add_option_function<std::string>(
        "--strategy", [this](const std::string& v) { overrides["strategy"] = v; },
        "dynamic | fixed | total");
    integer("fixed_count", "points per stroke for the fixed strategy");
    integer("k_cap", "neighbor capacity per query group");
    integer("epochs", "training epochs");
    integer("num_classes", "stroke classes");
    integer("grad_accum", "documents per optimizer step");
    integer("rng_seed", "seed for init, shuffling and determinism");
    integer("conv_channels", "conv channels in sequence encoders");
    integer("feature_channels", "reference feature width C");
    integer("rpts_concat_slots", "slots for the concat regression ablation");
    num("lr0", "initial learning rate");
    num("lr_min", "cosine floor learning rate");
    num("aux_weight", "transition loss mixing coefficient");
    num("early_stop_train_acc", "stop when train accuracy reaches this");
    flag("isa_off", "bypass inline sequence attention");
    flag("ceq_ball_only", "restrict queries to the 2:2 ball branch");
    flag("rpts_concat", "fixed-slot concat instead of MLP+max regression");
    flag("aux_off", "disable the auxiliary transition branch");
  }

  TrainConfig build() const {
    TrainConfig cfg;
    if (!config_file.empty()) cfg = config_with_overrides(cfg, read_file(config_file));
    if (!overrides.empty()) cfg = config_with_overrides(cfg, overrides.dump());
    cfg.validate();
    return cfg;
  }
};

int cmd_gen_data(const std::string& out_dir, std::size_t num_docs, std::uint64_t seed,
                 const std::vector<std::string>& class_names, std::size_t strokes_min,
                 std::size_t strokes_max, double jitter, double train_frac, double val_frac) {
  CorpusSpec spec;
  spec.num_documents = num_docs;
  spec.rng_seed = seed;
  spec.min_strokes_per_doc = strokes_min;
  spec.max_strokes_per_doc = strokes_max;
  spec.jitter = jitter;
  if (!class_names.empty()) {
    spec.classes.clear();
    for (const auto& n : class_names) spec.classes.push_back(generator_kind_from_name(n));
  }
  const auto corpus = generate_corpus(spec);
  const std::size_t n_train = static_cast<std::size_t>(train_frac * corpus.size());
  const std::size_t n_val = static_cast<std::size_t>(val_frac * corpus.size());
  for (const char* split : {"train", "val", "test"}) {
    fs::create_directories(fs::path(out_dir) / split);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const char* split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.json", i);
    save_document_file(corpus[i], (fs::path(out_dir) / split / name).string());
  }
  std::cout << "wrote " << corpus.size() << " documents to " << out_dir << " (train "
            << n_train << ", val " << n_val << ", test " << corpus.size() - n_train - n_val
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"StrokeNet: online handwritten stroke classification"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic labeled corpus");
  std::string gen_out = "corpus";
  std::size_t gen_n = 250, gen_min = 24, gen_max = 48;
  std::uint64_t gen_seed = 1;
  double gen_jitter = 0.002, gen_train = 0.8, gen_val = 0.0;
  std::vector<std::string> gen_classes;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--num-docs", gen_n, "number of documents");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--classes", gen_classes,
                  "generator kinds (text-row, table-grid, figure-blob)");
  gen->add_option("--strokes-min", gen_min, "minimum strokes per document");
  gen->add_option("--strokes-max", gen_max, "maximum strokes per document");
  gen->add_option("--jitter", gen_jitter, "per-point Gaussian jitter");
  gen->add_option("--train-frac", gen_train, "fraction of documents in train/");
  gen->add_option("--val-frac", gen_val, "fraction of documents in val/");

  // train
  auto* tr = app.add_subcommand("train", "train a model on a corpus directory");
  std::string tr_data, tr_out = "checkpoint.json", tr_log;
  ConfigFlags tr_cfg;
  tr->add_option("--data", tr_data, "corpus directory holding train/ (and optional val/)")
      ->required();
  tr->add_option("--out", tr_out, "checkpoint output path");
  tr->add_option("--log", tr_log, "per-epoch JSONL log path");
  tr_cfg.add_to(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus split");
  std::string ev_data, ev_ckpt, ev_report, ev_split = "test";
  ConfigFlags ev_cfg;
  ev->add_option("--data", ev_data, "corpus directory")->required();
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--split", ev_split, "subdirectory to evaluate (default test)");
  ev->add_option("--report", ev_report, "write the JSON report here");
  ev_cfg.add_to(ev);

  // predict
  auto* pr = app.add_subcommand("predict", "label a single document");
  std::string pr_input, pr_ckpt, pr_out;
  pr->add_option("--input", pr_input, "document JSON path")->required();
  pr->add_option("--checkpoint", pr_ckpt, "checkpoint path")->required();
  pr->add_option("--out", pr_out, "write predictions JSON here (default stdout)");

  // export-svg
  auto* sv = app.add_subcommand("export-svg", "render a document to SVG");
  std::string sv_input, sv_out, sv_pred, sv_ckpt;
  sv->add_option("--input", sv_input, "document JSON path")->required();
  sv->add_option("--out", sv_out, "SVG output path")->required();
  sv->add_option("--predictions", sv_pred, "predictions JSON from `predict`");
  sv->add_option("--checkpoint", sv_ckpt, "predict labels with this checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_data(gen_out, gen_n, gen_seed, gen_classes, gen_min, gen_max, gen_jitter,
                          gen_train, gen_val);
    }
    if (tr->parsed()) {
      TrainConfig cfg = tr_cfg.build();
      const auto train_docs = load_split(fs::path(tr_data) / "train");
      std::vector<Document> val_docs;
      if (fs::is_directory(fs::path(tr_data) / "val")) {
        val_docs = load_split(fs::path(tr_data) / "val");
      }
      std::ofstream log_file;
      std::ostream* log_stream = &std::cout;
      if (!tr_log.empty()) {
        log_file.open(tr_log);
        if (!log_file) throw Error("cannot open '" + tr_log + "' for writing");
        log_stream = &log_file;
      }
      TrainResult result = train(train_docs, val_docs, cfg, log_stream);
      save_checkpoint(result.params, cfg, tr_out);
      std::cout << "checkpoint written to " << tr_out << "\n";
      return 0;
    }
    if (ev->parsed()) {
      Checkpoint ck = load_checkpoint(ev_ckpt);
      if (!ev_cfg.overrides.empty() || !ev_cfg.config_file.empty()) {
        const TrainConfig requested = ev_cfg.build();
        if (config_hash(requested) != config_hash(ck.config))
          throw ConfigError("eval: requested config does not match the checkpoint (hash " +
                            config_hash(requested) + " vs " + config_hash(ck.config) + ")");
      }
      const auto docs = load_split(fs::path(ev_data) / ev_split);
      EvalReport report = evaluate(docs, ck.params, ck.config);
      const std::string json = report_to_json(report);
      if (!ev_report.empty()) write_file(ev_report, json);
      std::cout << json << "\n";
      return 0;
    }
    if (pr->parsed()) {
      Checkpoint ck = load_checkpoint(pr_ckpt);
      const Document doc = load_document_file(pr_input);
      Prediction p = predict(doc, ck.params, ck.config);
      nlohmann::json j;
      j["id"] = doc.id;
      j["labels"] = p.labels;
      j["transitions"] = p.transitions;
      const std::string out = j.dump(2);
      if (pr_out.empty()) {
        std::cout << out << "\n";
      } else {
        write_file(pr_out, out);
      }
      return 0;
    }
    if (sv->parsed()) {
      const Document doc = load_document_file(sv_input);
      std::vector<int> labels;
      if (!sv_pred.empty()) {
        nlohmann::json j = nlohmann::json::parse(read_file(sv_pred));
        labels = j.at("labels").get<std::vector<int>>();
      } else if (!sv_ckpt.empty()) {
        Checkpoint ck = load_checkpoint(sv_ckpt);
        labels = predict(doc, ck.params, ck.config).labels;
      } else {
        for (const Stroke& s : doc.strokes) {
          if (!s.label.has_value())
            throw Error("export-svg: document is unlabeled; pass --predictions or --checkpoint");
          labels.push_back(*s.label);
        }
      }
      write_file(sv_out, export_svg(doc, labels));
      return 0;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
