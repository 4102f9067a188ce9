// SPDX-License-Identifier: Apache-2.0
#include "painrnn/config.hpp"

#include <algorithm>

#include "painrnn/text.hpp"

namespace painrnn::config {

namespace {

const std::vector<std::pair<std::string, std::string>> &default_pairs() {
  static const std::vector<std::pair<std::string, std::string>> d{
      // inputs and outputs
      {"data", ""},
      {"model", ""},
      {"references", ""},
      {"classifier", ""},
      {"predict_data", ""},
      {"out", "out"},
      // run
      {"seed", "1"},
      {"repetitions", "5"},
      {"task", "multilabel"},
      {"ablation", "SF-HC"},
      {"trial_kind", "all"},
      {"pain_bands", "false"},
      // synthetic cohort
      {"n_subjects", "6"},
      {"trials_per_subject", "6"},
      {"length_min", "30"},
      {"length_max", "40"},
      {"noise_scale", "0.1"},
      // autoencoder ensemble
      {"hidden", "128,128,64"},
      {"skip", "3,3,2"},
      {"l1_weight", "0.005"},
      {"max_length", "4096"},
      {"batch_size", "8"},
      {"schedule", "70:0.01,30:0.001,30:0.0001"},
      {"beta1", "0.9"},
      {"beta2", "0.999"},
      {"epsilon", "1e-08"},
      {"weight_decay", "0.0001"},
      // fusion head
      {"head_epochs", "60"},
      {"head_batch_size", "8"},
      {"head_learning_rate", "0.001"},
      // classifiers
      {"glocal_rank", "6"},
      {"glocal_groups", "4"},
      {"glocal_fit_weight", "1"},
      {"glocal_manifold_weight", "0.1"},
      {"glocal_ridge", "0.001"},
      {"glocal_max_rounds", "100"},
      {"glocal_tolerance", "1e-06"},
      {"kmeans_iterations", "50"},
      {"softmax_epochs", "500"},
      {"softmax_learning_rate", "0.05"},
      // hand-crafted features
      {"bins", "16"},
      {"theta", "2"},
      {"dba_iterations", "10"},
  };
  return d;
}

}  // namespace

const std::vector<std::string> &RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto &[key, _] : default_pairs()) k.push_back(key);
    return k;
  }();
  return keys;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (const auto &[k, v] : default_pairs()) c.values_[k] = v;
  c.base_dir_ = ".";
  return c;
}

RunConfig RunConfig::from_text(const std::string &content, const std::string &source,
                               const std::filesystem::path &base_dir) {
  RunConfig c = defaults();
  c.base_dir_ = base_dir.empty() ? std::filesystem::path(".") : base_dir;
  for (const auto &[k, v] : text::parse_key_values(content, source)) {
    require(c.values_.count(k) == 1, ErrorKind::InvalidArgument, source + ": unknown config key '" + k + "'");
    c.values_[k] = v;
  }
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path &path) {
  return from_text(text::read_file(path), path.string(), path.parent_path());
}

void RunConfig::set(const std::string &key, const std::string &value) {
  require(values_.count(key) == 1, ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string &RunConfig::get(const std::string &key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string &key) const { return text::parse_double(get(key), "config key " + key); }

long long RunConfig::get_int(const std::string &key) const { return text::parse_int(get(key), "config key " + key); }

bool RunConfig::get_bool(const std::string &key) const {
  const std::string &v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::InvalidArgument, "config key " + key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string &key) const {
  std::vector<std::string> out;
  for (const auto &p : text::split(get(key), ',')) out.push_back(text::trim(p));
  return out;
}

std::filesystem::path RunConfig::get_path(const std::string &key) const {
  const std::string &v = get(key);
  if (v.empty()) return {};
  const std::filesystem::path p(v);
  return p.is_absolute() ? p : base_dir_ / p;
}

std::string RunConfig::resolved_text() const {
  static const std::vector<std::string> path_keys{"data", "model", "references", "classifier", "predict_data", "out"};
  std::string out;
  for (const auto &[k, v] : values_) {
    const bool is_path = std::find(path_keys.begin(), path_keys.end(), k) != path_keys.end();
    const std::string shown = is_path && !v.empty() ? std::filesystem::absolute(get_path(k)).lexically_normal().string() : v;
    out += k + " = " + shown + "\n";
  }
  return out;
}

std::uint64_t RunConfig::hash() const { return text::fnv1a(resolved_text()); }

std::optional<dataset::TrialKind> RunConfig::trial_kind() const {
  const std::string &v = get("trial_kind");
  if (v == "all") return std::nullopt;
  return dataset::parse_trial_kind(v);
}

dataset::SynthConfig RunConfig::synth() const {
  dataset::SynthConfig s;
  s.n_subjects = static_cast<int>(get_int("n_subjects"));
  s.trials_per_subject = static_cast<int>(get_int("trials_per_subject"));
  s.length_min = static_cast<int>(get_int("length_min"));
  s.length_max = static_cast<int>(get_int("length_max"));
  s.noise_scale = get_double("noise_scale");
  s.seed = static_cast<std::uint64_t>(get_int("seed"));
  return s;
}

pipeline::PipelineConfig RunConfig::pipeline() const {
  pipeline::PipelineConfig p;
  const auto hidden = get_list("hidden");
  const auto skip = get_list("skip");
  require(hidden.size() == 3 && skip.size() == 3, ErrorKind::InvalidArgument,
          "config keys hidden and skip need three comma-separated values");
  p.model.hidden.clear();
  p.model.skip.clear();
  for (const auto &h : hidden) p.model.hidden.push_back(text::parse_int(h, "config key hidden"));
  for (const auto &s : skip) p.model.skip.push_back(static_cast<int>(text::parse_int(s, "config key skip")));
  p.model.l1_weight = get_double("l1_weight");
  p.model.max_length = get_int("max_length");

  const long long batch = get_int("batch_size");
  require(batch >= 1, ErrorKind::InvalidArgument, "config key batch_size must be >= 1");
  p.train.batch_size = static_cast<std::size_t>(batch);
  p.train.schedule.clear();
  for (const auto &phase : get_list("schedule")) {
    const auto parts = text::split(phase, ':');
    require(parts.size() == 2, ErrorKind::InvalidArgument,
            "config key schedule: expected epochs:rate pairs, got '" + phase + "'");
    p.train.schedule.push_back({static_cast<int>(text::parse_int(text::trim(parts[0]), "schedule epochs")),
                                text::parse_double(text::trim(parts[1]), "schedule rate")});
  }
  p.train.adam.beta1 = get_double("beta1");
  p.train.adam.beta2 = get_double("beta2");
  p.train.adam.epsilon = get_double("epsilon");
  p.train.adam.weight_decay = get_double("weight_decay");
  p.train.validate();

  p.head.epochs = static_cast<int>(get_int("head_epochs"));
  const long long hb = get_int("head_batch_size");
  require(hb >= 2 && p.head.epochs >= 0, ErrorKind::InvalidArgument,
          "config keys head_batch_size >= 2 and head_epochs >= 0 required");
  p.head.batch_size = static_cast<std::size_t>(hb);
  p.head.learning_rate = get_double("head_learning_rate");
  p.head.adam = p.train.adam;

  p.glocal.rank = get_int("glocal_rank");
  p.glocal.groups = get_int("glocal_groups");
  p.glocal.fit_weight = get_double("glocal_fit_weight");
  p.glocal.manifold_weight = get_double("glocal_manifold_weight");
  p.glocal.ridge = get_double("glocal_ridge");
  p.glocal.max_rounds = static_cast<int>(get_int("glocal_max_rounds"));
  p.glocal.tolerance = get_double("glocal_tolerance");
  p.glocal.kmeans_iterations = static_cast<int>(get_int("kmeans_iterations"));
  p.glocal.validate();
  p.softmax.epochs = static_cast<int>(get_int("softmax_epochs"));
  p.softmax.learning_rate = get_double("softmax_learning_rate");
  p.softmax.adam = p.train.adam;

  p.codec.banded = get_bool("pain_bands");
  p.features.bins = static_cast<int>(get_int("bins"));
  p.features.theta = get_double("theta");
  p.features.dba_iterations = static_cast<int>(get_int("dba_iterations"));
  require(p.features.bins >= 2 && p.features.theta > 0 && p.features.dba_iterations >= 1,
          ErrorKind::InvalidArgument, "config keys bins >= 2, theta > 0, dba_iterations >= 1 required");

  p.task = pipeline::parse_task(get("task"));
  p.cells = pipeline::parse_cells(get("ablation"));
  p.repetitions = static_cast<int>(get_int("repetitions"));
  require(p.repetitions >= 1, ErrorKind::InvalidArgument, "config key repetitions must be >= 1");
  p.seed = static_cast<std::uint64_t>(get_int("seed"));
  p.model.validate();
  return p;
}

}  // namespace painrnn::config
