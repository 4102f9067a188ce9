// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "painrnn/dataset.hpp"
#include "painrnn/pipeline.hpp"

namespace painrnn::config {

/// Flat run configuration. Every known key is always present (defaults are
/// filled in); unknown keys are rejected on load and on `set`.
class RunConfig {
 public:
  static RunConfig defaults();
  /// Parses `key = value` lines over the defaults. Relative paths resolve
  /// against the file's directory.
  static RunConfig from_file(const std::filesystem::path &path);
  static RunConfig from_text(const std::string &content, const std::string &source,
                             const std::filesystem::path &base_dir);

  static const std::vector<std::string> &known_keys();

  void set(const std::string &key, const std::string &value);
  const std::string &get(const std::string &key) const;
  double get_double(const std::string &key) const;
  long long get_int(const std::string &key) const;
  bool get_bool(const std::string &key) const;
  std::vector<std::string> get_list(const std::string &key) const;
  /// Empty when the value is empty; otherwise resolved against the base dir.
  std::filesystem::path get_path(const std::string &key) const;

  /// Sorted `key = value` lines; reading them back yields the same config.
  std::string resolved_text() const;
  std::uint64_t hash() const;

  std::optional<dataset::TrialKind> trial_kind() const;
  dataset::SynthConfig synth() const;
  pipeline::PipelineConfig pipeline() const;

  const std::filesystem::path &base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

}  // namespace painrnn::config
