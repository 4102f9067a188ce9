// SPDX-License-Identifier: Apache-2.0
// painrnn: command-line driver for synthesis, training, feature extraction,
// classification, evaluation and CDF export.

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "painrnn/config.hpp"
#include "painrnn/dataset.hpp"
#include "painrnn/dtwfeat/features.hpp"
#include "painrnn/pipeline.hpp"
#include "painrnn/serialize.hpp"
#include "painrnn/srnn/train.hpp"
#include "painrnn/text.hpp"

namespace fs = std::filesystem;
using namespace painrnn;
using serialize::Json;

namespace {

constexpr const char *kModelFormat = "painrnn.ensemble";
constexpr const char *kFeatureFormat = "painrnn.features";
constexpr const char *kClassifierFormat = "painrnn.classifier";

struct Flags {
  std::string config_path;
  std::optional<long long> seed;
  std::string out;
  std::optional<long long> repetitions;
  std::string ablation;
  std::string trial_kind;
  std::string task;
  std::vector<std::string> overrides;
};

void log(const std::string &msg) { std::cerr << "painrnn: " << msg << '\n'; }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// One run per output directory.
class OutputLock {
 public:
  explicit OutputLock(const fs::path &dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    require(fd >= 0, ErrorKind::State,
            "output directory " + dir.string() + " is locked by another run (remove " + path_.string() +
                " if stale)");
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock &) = delete;
  OutputLock &operator=(const OutputLock &) = delete;

 private:
  fs::path path_;
};

class Run {
 public:
  Run(std::string command, config::RunConfig cfg)
      : command_(std::move(command)), cfg_(std::move(cfg)), out_(cfg_.get_path("out")), lock_(out_) {}

  const config::RunConfig &cfg() const { return cfg_; }
  const fs::path &out() const { return out_; }

  void write(const std::string &name, const std::string &content) {
    text::write_file(out_ / name, content);
    outputs_[name] = text::fnv1a(content);
  }
  void write_json(const std::string &name, const Json &j) { write(name, j.dump() + "\n"); }
  void record(const std::string &name, std::uint64_t digest) { outputs_[name] = digest; }

  void finish() {
    const std::string resolved = cfg_.resolved_text();
    text::write_file(out_ / "config.resolved", resolved);
    Json manifest{{"tool", "painrnn"},
                  {"version", std::string(kVersion)},
                  {"command", command_},
                  {"seed", cfg_.get("seed")},
                  {"config", "config.resolved"},
                  {"config_hash", hex(text::fnv1a(resolved))},
                  {"rerun", "painrnn " + command_ + " --config config.resolved"},
                  {"outputs", Json::object()}};
    for (const auto &[name, digest] : outputs_) manifest["outputs"][name] = hex(digest);
    text::write_file(out_ / "manifest.json", manifest.dump(2) + "\n");
    log("wrote " + std::to_string(outputs_.size()) + " artifact(s) to " + out_.string());
  }

 private:
  std::string command_;
  config::RunConfig cfg_;
  fs::path out_;
  OutputLock lock_;
  std::map<std::string, std::uint64_t> outputs_;
};

config::RunConfig resolve(const Flags &f) {
  auto cfg = f.config_path.empty() ? config::RunConfig::defaults() : config::RunConfig::from_file(f.config_path);
  for (const auto &o : f.overrides) {
    const auto eq = o.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidArgument, "--set expects key=value, got '" + o + "'");
    cfg.set(text::trim(o.substr(0, eq)), text::trim(o.substr(eq + 1)));
  }
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (!f.out.empty()) cfg.set("out", fs::absolute(f.out).string());
  if (f.repetitions) cfg.set("repetitions", std::to_string(*f.repetitions));
  if (!f.ablation.empty()) cfg.set("ablation", f.ablation);
  if (!f.trial_kind.empty()) cfg.set("trial_kind", f.trial_kind);
  if (!f.task.empty()) cfg.set("task", f.task);
  cfg.pipeline();  // validates every model-related key up front
  return cfg;
}

dataset::Dataset load_raw(const config::RunConfig &cfg, const std::string &key = "data") {
  const fs::path p = cfg.get_path(key);
  require(!p.empty(), ErrorKind::InvalidArgument, "config key '" + key + "' (dataset directory) is required");
  dataset::LoadOptions opts;
  opts.normalize = false;
  opts.trial_kind = cfg.trial_kind();
  auto ds = dataset::load_dataset(p, opts);
  require(!ds.samples.empty(), ErrorKind::InvalidArgument, p.string() + ": no trials after filtering");
  return ds;
}

fs::path required_path(const config::RunConfig &cfg, const std::string &key, const std::string &what) {
  const fs::path p = cfg.get_path(key);
  require(!p.empty(), ErrorKind::InvalidArgument, "config key '" + key + "' (" + what + ") is required");
  return p;
}

struct ModelCheckpoint {
  srnn::EnsembleModel model;
  dataset::ChannelStats stats;
};

ModelCheckpoint load_model(const fs::path &p) {
  const Json body = serialize::read_document(p, kModelFormat);
  try {
    return {serialize::ensemble_from_json(body.at("ensemble")),
            serialize::channel_stats_from_json(body.at("channel_stats"))};
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::Format, p.string() + ": " + e.what());
  }
}

dtwfeat::FeatureExtractor load_extractor(const fs::path &p) {
  const Json body = serialize::read_document(p, kFeatureFormat);
  try {
    return serialize::feature_extractor_from_json(body.at("extractor"));
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::Format, p.string() + ": " + e.what());
  }
}

std::string features_csv(const dataset::Dataset &ds, const MatrixXd &F) {
  std::ostringstream os;
  os << "subject_id,trial_file";
  for (std::size_t k = 1; k <= dtwfeat::kFeatureCount; ++k) os << ",d" << k;
  os << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.samples[i].subject_id << ',' << ds.samples[i].trial_file;
    for (Index k = 0; k < F.rows(); ++k) os << ',' << text::format_double(F(k, static_cast<Index>(i)));
    os << '\n';
  }
  return os.str();
}

std::string predictions_header(Index scores, bool with_run_columns) {
  std::ostringstream os;
  if (with_run_columns) os << "method,repetition,";
  os << "subject_id,trial_file,pain_pred,protective_pred";
  for (Index k = 1; k <= scores; ++k) os << ",score_" << k;
  os << '\n';
  return os.str();
}

void prediction_row(std::ostream &os, const std::string &subject, const std::string &trial,
                    const pipeline::Prediction &p) {
  os << subject << ',' << trial << ',' << p.pain_class << ',' << (p.protective ? 1 : 0);
  for (Index k = 0; k < p.scores.size(); ++k) os << ',' << text::format_double(p.scores(k));
  os << '\n';
}

// ---------------------------------------------------------------------------

void cmd_synth(Run &run) {
  const auto sc = run.cfg().synth();
  const auto ds = dataset::synthesize_dataset(sc);
  const fs::path dir = run.out() / "data";
  dataset::save_dataset(ds, dir);
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      run.record(fs::relative(entry.path(), run.out()).generic_string(), text::fnv1a(text::read_file(entry.path())));
    }
  }
  log("synthesized " + std::to_string(ds.size()) + " trials from " + std::to_string(ds.subjects().size()) +
      " subjects");
}

void cmd_train(Run &run) {
  const auto pc = run.cfg().pipeline();
  const auto raw = load_raw(run.cfg());
  const auto stats = dataset::fit_channel_stats(raw);
  const auto ds = dataset::normalize(raw, stats);
  auto mcfg = pc.model;
  mcfg.framework = pc.cells.front().framework;
  auto tcfg = pc.train;
  tcfg.seed = pc.seed;
  log("training " + srnn::to_string(mcfg.framework) + " ensemble on " + std::to_string(ds.size()) + " trials for " +
      std::to_string(tcfg.total_epochs()) + " epochs");
  const auto res = srnn::train(ds, mcfg, tcfg);
  run.write_json("model.json", serialize::document(kModelFormat, Json{{"ensemble", serialize::to_json(res.model)},
                                                                    {"channel_stats", serialize::to_json(stats)}}));
  std::ostringstream trace;
  trace << "epoch,learning_rate,mean_loss\n";
  for (const auto &e : res.trace) {
    trace << e.epoch << ',' << text::format_double(e.learning_rate) << ',' << text::format_double(e.mean_loss) << '\n';
  }
  run.write("loss_trace.csv", trace.str());
  log("final mean loss " + text::format_double(res.trace.back().mean_loss));
}

dataset::Dataset normalized_with(const dataset::Dataset &raw, const config::RunConfig &cfg) {
  const fs::path model = cfg.get_path("model");
  return dataset::normalize(raw, model.empty() ? dataset::fit_channel_stats(raw) : load_model(model).stats);
}

void cmd_features(Run &run) {
  const auto pc = run.cfg().pipeline();
  const auto ds = normalized_with(load_raw(run.cfg()), run.cfg());
  const fs::path refs = run.cfg().get_path("references");
  const auto fx = refs.empty() ? dtwfeat::fit_feature_extractor(ds, pc.features.bins, pc.features.theta,
                                                                pc.features.dba_iterations)
                               : load_extractor(refs);
  if (refs.empty()) {
    run.write_json("references.json",
                   serialize::document(kFeatureFormat, Json{{"extractor", serialize::to_json(fx)}}));
  }
  run.write("features.csv", features_csv(ds, pipeline::feature_matrix(fx, ds)));
}

void cmd_classify(Run &run) {
  const auto &cfg = run.cfg();
  const auto pc = cfg.pipeline();
  const auto ckpt = load_model(required_path(cfg, "model", "trained ensemble checkpoint"));
  const auto train_ds = dataset::normalize(load_raw(cfg), ckpt.stats);
  const fs::path predict_path = cfg.get_path("predict_data");
  const auto test_ds =
      predict_path.empty() ? train_ds : dataset::normalize(load_raw(cfg, "predict_data"), ckpt.stats);

  pipeline::Classifier clf;
  const fs::path clf_path = cfg.get_path("classifier");
  if (!clf_path.empty()) {
    clf = pipeline::classifier_from_json(serialize::read_document(clf_path, kClassifierFormat));
  }
  const bool hc = clf_path.empty() ? pc.cells.front().handcrafted : clf.handcrafted;
  std::optional<dtwfeat::FeatureExtractor> fx;
  if (hc) {
    const fs::path refs = cfg.get_path("references");
    fx = refs.empty() ? dtwfeat::fit_feature_extractor(train_ds, pc.features.bins, pc.features.theta,
                                                       pc.features.dba_iterations)
                      : load_extractor(refs);
  }
  if (clf_path.empty()) {
    log("fitting " + pipeline::to_string(pc.task) + " classifier on " + std::to_string(train_ds.size()) + " trials");
    const MatrixXd F = hc ? pipeline::feature_matrix(*fx, train_ds) : MatrixXd();
    clf = pipeline::fit_classifier(pipeline::latent_matrix(ckpt.model, train_ds), F, train_ds, pc, hc,
                                   mix_seed(pc.seed, 7));
    Json body = pipeline::to_json(clf);
    if (fx) body["extractor"] = serialize::to_json(*fx);
    run.write_json("classifier.json", serialize::document(kClassifierFormat, body));
  }
  const MatrixXd F = hc ? pipeline::feature_matrix(*fx, test_ds) : MatrixXd();
  const auto preds = pipeline::predict(clf, pipeline::latent_matrix(ckpt.model, test_ds), F);
  std::ostringstream os;
  os << predictions_header(preds.empty() ? 0 : preds.front().scores.size(), false);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    prediction_row(os, test_ds.samples[i].subject_id, test_ds.samples[i].trial_file, preds[i]);
  }
  run.write("predictions.csv", os.str());
}

void cmd_evaluate(Run &run) {
  const auto pc = run.cfg().pipeline();
  const auto raw = load_raw(run.cfg());
  std::string cells;
  for (const auto &c : pc.cells) cells += (cells.empty() ? "" : ",") + c.name();
  log("evaluating " + cells + " (" + pipeline::to_string(pc.task) + ", " + std::to_string(pc.repetitions) +
      " repetition(s))");
  const auto report = pipeline::cross_validate(raw, pc, log);
  run.write("report.csv", pipeline::report_to_csv(report));
  run.write_json("report.json", pipeline::report_to_json(report));
  std::ostringstream os;
  const Index scores = report.cells.front().predictions.front().prediction.scores.size();
  os << predictions_header(scores, true);
  for (const auto &c : report.cells) {
    for (const auto &p : c.predictions) {
      os << c.method << ',' << p.repetition << ',';
      prediction_row(os, p.subject_id, p.trial_file, p.prediction);
    }
  }
  run.write("predictions.csv", os.str());
  for (const auto &c : report.cells) {
    std::string line = c.method;
    for (std::size_t m = 0; m < report.metric_names.size(); ++m) {
      line += " " + report.metric_names[m] + "=" + text::format_double(c.summaries[m].mean);
    }
    log(line);
  }
}

void cmd_export_cdf(Run &run) {
  const auto pc = run.cfg().pipeline();
  const auto ds = normalized_with(load_raw(run.cfg()), run.cfg());
  const fs::path refs = run.cfg().get_path("references");
  const auto fx = refs.empty() ? dtwfeat::fit_feature_extractor(ds, pc.features.bins, pc.features.theta,
                                                                pc.features.dba_iterations)
                               : load_extractor(refs);
  std::map<std::string, int> max_pain;
  for (const auto &s : ds.samples) max_pain[s.subject_id] = std::max(max_pain[s.subject_id], s.pain_level);
  std::map<std::string, std::vector<dtwfeat::HandcraftedFeatures>> groups;
  for (bool cp : {false, true}) {
    for (auto kind : {dataset::TrialKind::Normal, dataset::TrialKind::Difficult}) groups[dtwfeat::cohort_group(cp, kind)];
  }
  for (const auto &s : ds.samples) {
    groups[dtwfeat::cohort_group(max_pain[s.subject_id] > 0, s.trial_kind)].push_back(
        dtwfeat::extract_feature_vector(s, fx));
  }
  std::vector<std::string> skipped;
  const auto points = dtwfeat::export_feature_cdf(groups, &skipped);
  for (const auto &g : skipped) log("warning: group " + g + " has no trials; skipped");
  run.write("cdf.csv", dtwfeat::cdf_to_csv(points));
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"painrnn: multistream autoencoder ensemble with hand-crafted DTW features for pain and "
               "protective-behaviour recognition"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Flags flags;

  struct Command {
    const char *name;
    const char *help;
    void (*fn)(Run &);
  };
  const std::vector<Command> commands{
      {"synth", "Generate a synthetic multistream cohort into <out>/data", cmd_synth},
      {"train", "Train the autoencoder ensemble on <data>", cmd_train},
      {"features", "Fit DTW references on <data> and dump the hand-crafted features", cmd_features},
      {"classify", "Fit (or load) the fused classifier and write per-trial predictions", cmd_classify},
      {"evaluate", "Leave-one-subject-out evaluation of one or more ablation cells", cmd_evaluate},
      {"export-cdf", "Per-cohort empirical CDFs of the hand-crafted features", cmd_export_cdf},
  };
  for (const auto &c : commands) {
    auto *sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", flags.config_path, "Flat key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Run seed");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--repetitions", flags.repetitions, "Independent repetitions (evaluate)");
    sub->add_option("--ablation", flags.ablation, "SF-HC, SF-noHC, IF-HC, IF-noHC, a comma list, or all");
    sub->add_option("--trial-kind", flags.trial_kind, "normal, difficult or all")
        ->check(CLI::IsMember({"normal", "difficult", "all"}));
    sub->add_option("--task", flags.task, "multilabel or binary")->check(CLI::IsMember({"multilabel", "binary"}));
    sub->add_option("--set", flags.overrides, "Override a config key (key=value); repeatable");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: usage: " << e.what() << '\n' << app.help();
    return 2;
  }

  for (const auto &c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    try {
      Run run(c.name, resolve(flags));
      c.fn(run);
      run.finish();
      return 0;
    } catch (const Error &e) {
      std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
      return 1;
    } catch (const std::exception &e) {
      std::cerr << "error: internal: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
