// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "painrnn/common.hpp"

namespace painrnn::dataset {

inline constexpr Index kAngleChannels = 13;
inline constexpr Index kEnergyChannels = 13;
inline constexpr Index kEmgChannels = 4;
inline constexpr std::array<Index, 3> kStreamChannels{kAngleChannels, kEnergyChannels,
                                                      kEmgChannels};
inline constexpr int kMaxPainLevel = 10;

enum class TrialKind { Normal, Difficult };

std::string to_string(TrialKind kind);
TrialKind parse_trial_kind(const std::string &text);

/// One trial: three time-aligned streams plus labels.
struct MultistreamSample {
  std::string subject_id;
  std::string trial_file;
  TrialKind trial_kind = TrialKind::Normal;
  Series angles;    // C x 13
  Series energies;  // C x 13
  Series emg;       // C x 4
  int pain_level = 0;
  bool protective = false;

  Index length() const { return angles.rows(); }
  const Series &stream(std::size_t i) const;
  Series &stream(std::size_t i);
};

/// Throws Error on any violated invariant (row counts, widths, finiteness,
/// pain range).
void validate(const MultistreamSample &s);

/// Per-channel z-score parameters for each of the three streams.
struct ChannelStats {
  std::array<VectorXd, 3> mean;
  std::array<VectorXd, 3> stddev;

  bool empty() const { return mean[0].size() == 0; }
};

struct Dataset {
  std::vector<MultistreamSample> samples;
  ChannelStats channel_stats;
  bool normalized = false;

  std::size_t size() const { return samples.size(); }
  std::vector<std::string> subjects() const;  // sorted, distinct
};

/// Statistics pooled over every time step of every sample.
ChannelStats fit_channel_stats(const Dataset &ds);

/// Zero-variance channels map to zero.
Dataset normalize(const Dataset &ds, const ChannelStats &stats);
Dataset denormalize(const Dataset &ds);

struct LoadOptions {
  bool normalize = true;
  std::optional<TrialKind> trial_kind;  // nullopt keeps every trial
};

/// Reads `labels.csv` plus one stream file per trial from `root`.
Dataset load_dataset(const std::filesystem::path &root, const LoadOptions &opts = {});

/// Writes the on-disk layout read by load_dataset. Values are written with
/// round-trip precision.
void save_dataset(const Dataset &ds, const std::filesystem::path &root);

Dataset filter_trial_kind(const Dataset &ds, std::optional<TrialKind> kind);

struct SynthConfig {
  int n_subjects = 6;
  int trials_per_subject = 6;
  int length_min = 30;
  int length_max = 40;
  double noise_scale = 0.1;
  std::uint64_t seed = 1;
};

/// Deterministic synthetic cohort. Even-indexed subjects are healthy (pain 0,
/// never protective); odd-indexed subjects alternate protective and
/// non-protective trials. Protective trials use a reduced range-of-motion
/// template and an elevated sEMG baseline, and their pain level grows with the
/// guarding severity.
Dataset synthesize_dataset(const SynthConfig &cfg);

struct Fold {
  std::string test_subject;
  Dataset train;
  Dataset test;
};

/// Leave-one-subject-out folds in sorted subject order.
std::vector<Fold> loso_splits(const Dataset &ds);

struct MiniBatch {
  std::vector<MultistreamSample> samples;  // all truncated to `length`
  std::vector<std::size_t> source_index;   // index into the originating dataset
  Index length = 0;
};

/// Truncates to the leading `length` rows.
MultistreamSample truncate(const MultistreamSample &s, Index length);

/// Seeded shuffle, then consecutive chunks of `batch_size`, each truncated to
/// its shortest member.
std::vector<MiniBatch> make_minibatches(const Dataset &ds, std::size_t batch_size,
                                        std::uint64_t seed);

}  // namespace painrnn::dataset
