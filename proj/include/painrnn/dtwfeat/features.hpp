// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "painrnn/dataset.hpp"

namespace painrnn::dtwfeat {

/// Probability vector over equal-width bins.
struct SymbolDistribution {
  std::vector<double> p;

  std::size_t bins() const { return p.size(); }
  /// Checks non-negativity and unit mass (1e-12).
  static SymbolDistribution from_probabilities(std::vector<double> p);
};

struct Symbolization {
  std::vector<int> symbols;  // bin index per value, in [0, K)
  SymbolDistribution distribution;
};

/// Bins `values` into K equal-width cells over [lo, hi]. Values outside the
/// range land in the edge bins; a degenerate range puts everything in bin 0.
Symbolization symbolize(std::span<const double> values, int bins, double lo, double hi);

/// Equal-width binning over the input's own [min, max].
SymbolDistribution discretize(std::span<const double> values, int bins);

double shannon_entropy(const SymbolDistribution &p);
double renyi_entropy(const SymbolDistribution &p, double q);
double simpson_diversity(const SymbolDistribution &p);

/// Number of phrases in the exhaustive LZ76 parse of a binary string.
std::size_t lz76_phrase_count(std::span<const std::uint8_t> bits);
/// c(n) log2(n) / n, clamped to [0, 1].
double lz76_normalized(std::span<const std::uint8_t> bits);
/// Median-threshold binarization (value > median -> 1), then lz76_normalized.
double lz76_complexity(std::span<const double> values);

struct CompositeFeatures {
  double space_filling = 0;   // fraction of non-zero symbols
  double expressiveness = 0;  // entropy / space_filling
  double perturbation = 0;    // LZ complexity / entropy
  double diversity = 1;       // exp(entropy)
};

CompositeFeatures composite_features(double shannon, std::span<const int> symbols, double lz);

inline constexpr std::size_t kFeatureCount = 8;

struct HandcraftedFeatures {
  std::array<double, kFeatureCount> values{};

  double shannon() const { return values[0]; }
  double renyi() const { return values[1]; }
  double simpson() const { return values[2]; }
  double space_filling() const { return values[3]; }
  double expressiveness() const { return values[4]; }
  double lempel_ziv() const { return values[5]; }
  double perturbation() const { return values[6]; }
  double diversity() const { return values[7]; }
};

/// All eight features of a residual sequence binned over [lo, hi].
HandcraftedFeatures features_from_residuals(std::span<const double> residuals, int bins, double lo,
                                            double hi);

using StreamReferences = std::array<Series, dataset::kStreamChannels.size()>;

/// Per-stream DBA references over `train`, reference length = median length.
StreamReferences build_references(const dataset::Dataset &train, int iterations = 10);

/// Residual magnitudes ||sample_u - ref_v|| along each stream's optimal path,
/// streams concatenated in order.
std::vector<double> residual_sequence(const dataset::MultistreamSample &sample,
                                      const StreamReferences &refs, double theta = 2.0);

struct BinRange {
  double lo = 0;
  double hi = 0;
};

struct FeatureExtractor {
  StreamReferences references;
  BinRange range;
  int bins = 16;
  double theta = 2.0;
};

/// References plus the residual bin range, all fit on the training fold.
FeatureExtractor fit_feature_extractor(const dataset::Dataset &train, int bins = 16,
                                       double theta = 2.0, int dba_iterations = 10);

/// With no `range`, the sample's own residual range is used for binning.
HandcraftedFeatures extract_feature_vector(const dataset::MultistreamSample &sample,
                                           const StreamReferences &refs, int bins = 16,
                                           double theta = 2.0,
                                           std::optional<BinRange> range = std::nullopt);
HandcraftedFeatures extract_feature_vector(const dataset::MultistreamSample &sample,
                                           const FeatureExtractor &fx);

/// "healthy-normal", "cp-difficult", ...
std::string cohort_group(bool chronic_pain, dataset::TrialKind kind);

struct CdfPoint {
  std::size_t feature = 0;  // 0-based feature index
  std::string group;
  double value = 0;
  double cum_prob = 0;
};

/// Empirical CDFs per feature and group: one point per distinct value,
/// cum_prob = fraction of the group at or below it. Empty groups are skipped
/// and named in `skipped`.
std::vector<CdfPoint> export_feature_cdf(
    const std::map<std::string, std::vector<HandcraftedFeatures>> &groups,
    std::vector<std::string> *skipped = nullptr);

std::string cdf_to_csv(const std::vector<CdfPoint> &points);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

}  // namespace painrnn::dtwfeat
