// SPDX-License-Identifier: Apache-2.0
#include "painrnn/dtwfeat/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "painrnn/dtwfeat/dtw.hpp"
#include "painrnn/text.hpp"

namespace painrnn::dtwfeat {

SymbolDistribution SymbolDistribution::from_probabilities(std::vector<double> p) {
  require(!p.empty(), ErrorKind::InvalidArgument, "distribution: no bins");
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument,
            "distribution: probabilities must be finite and non-negative");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorKind::InvalidArgument,
          "distribution: probabilities sum to " + text::format_double(total));
  return SymbolDistribution{std::move(p)};
}

Symbolization symbolize(std::span<const double> values, int bins, double lo, double hi) {
  require(bins >= 2, ErrorKind::InvalidArgument, "discretize: need at least 2 bins");
  require(!values.empty(), ErrorKind::InvalidArgument, "discretize: empty input");
  Symbolization out;
  out.symbols.resize(values.size(), 0);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double width = hi - lo;
  const bool degenerate = !(width > 0.0) || !std::isfinite(width);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    require(std::isfinite(v), ErrorKind::NonFinite, "discretize: non-finite value");
    int b = 0;
    if (!degenerate) {
      const double pos = std::floor((v - lo) / width * static_cast<double>(bins));
      b = static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    }
    out.symbols[i] = b;
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  for (auto &c : counts) c /= n;
  out.distribution.p = std::move(counts);
  return out;
}

SymbolDistribution discretize(std::span<const double> values, int bins) {
  require(bins >= 2, ErrorKind::InvalidArgument, "discretize: need at least 2 bins");
  require(!values.empty(), ErrorKind::InvalidArgument, "discretize: empty input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  return symbolize(values, bins, *mn, *mx).distribution;
}

double shannon_entropy(const SymbolDistribution &p) {
  double h = 0.0;
  for (double v : p.p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double renyi_entropy(const SymbolDistribution &p, double q) {
  require(q > 0.0 && std::isfinite(q), ErrorKind::InvalidArgument, "renyi: q must be > 0");
  require(q != 1.0, ErrorKind::InvalidArgument, "renyi: q = 1 is the Shannon limit; use shannon_entropy");
  double s = 0.0;
  for (double v : p.p) {
    if (v > 0.0) s += std::pow(v, q);
  }
  return std::log(s) / (1.0 - q);
}

double simpson_diversity(const SymbolDistribution &p) {
  double s = 0.0;
  for (double v : p.p) s += v * v;
  return s;
}

// Kaspar-Schuster scan.
std::size_t lz76_phrase_count(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  require(n >= 2, ErrorKind::InvalidArgument, "lz76: need at least 2 symbols");
  std::size_t c = 1, l = 1, i = 0, k = 1, k_max = 1;
  while (true) {
    if (bits[i + k - 1] == bits[l + k - 1]) {
      ++k;
      if (l + k > n) {
        ++c;
        break;
      }
    } else {
      k_max = std::max(k, k_max);
      ++i;
      if (i == l) {
        ++c;
        l += k_max;
        if (l + 1 > n) break;
        i = 0;
        k = 1;
        k_max = 1;
      } else {
        k = 1;
      }
    }
  }
  return c;
}

double lz76_normalized(std::span<const std::uint8_t> bits) {
  const double n = static_cast<double>(bits.size());
  const double c = static_cast<double>(lz76_phrase_count(bits));
  return std::clamp(c * std::log2(n) / n, 0.0, 1.0);
}

double lz76_complexity(std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::InvalidArgument, "lz76: need at least 2 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = values[i] > median ? 1 : 0;
  return lz76_normalized(bits);
}

CompositeFeatures composite_features(double shannon, std::span<const int> symbols, double lz) {
  CompositeFeatures f;
  if (!symbols.empty()) {
    std::size_t nonzero = 0;
    for (int s : symbols) {
      if (std::abs(static_cast<double>(s)) > 1e-12) ++nonzero;
    }
    f.space_filling = static_cast<double>(nonzero) / static_cast<double>(symbols.size());
  }
  f.expressiveness = f.space_filling == 0.0 ? 0.0 : shannon / f.space_filling;
  f.perturbation = shannon == 0.0 ? 0.0 : lz / shannon;
  f.diversity = std::exp(shannon);
  return f;
}

HandcraftedFeatures features_from_residuals(std::span<const double> residuals, int bins, double lo,
                                            double hi) {
  const auto sym = symbolize(residuals, bins, lo, hi);
  HandcraftedFeatures out;
  const double h = shannon_entropy(sym.distribution);
  const double lz = lz76_complexity(residuals);
  const auto comp = composite_features(h, sym.symbols, lz);
  out.values = {h,
                renyi_entropy(sym.distribution, 2.0),
                simpson_diversity(sym.distribution),
                comp.space_filling,
                comp.expressiveness,
                lz,
                comp.perturbation,
                comp.diversity};
  return out;
}

StreamReferences build_references(const dataset::Dataset &train, int iterations) {
  require(!train.samples.empty(), ErrorKind::InvalidArgument, "references: empty training set");
  std::vector<Index> lengths;
  for (const auto &s : train.samples) lengths.push_back(s.length());
  std::sort(lengths.begin(), lengths.end());
  const Index ref_len = lengths[(lengths.size() - 1) / 2];
  StreamReferences refs;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    std::vector<Series> series;
    series.reserve(train.samples.size());
    for (const auto &s : train.samples) series.push_back(s.stream(k));
    refs[k] = dba(series, ref_len, iterations).barycenter;
  }
  return refs;
}

std::vector<double> residual_sequence(const dataset::MultistreamSample &sample,
                                      const StreamReferences &refs, double theta) {
  std::vector<double> out;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const Series &s = sample.stream(k);
    const auto al = dtw(s, refs[k], theta);
    for (const auto &[u, v] : al.path) out.push_back((s.row(u) - refs[k].row(v)).norm());
  }
  return out;
}

FeatureExtractor fit_feature_extractor(const dataset::Dataset &train, int bins, double theta,
                                       int dba_iterations) {
  require(bins >= 2, ErrorKind::InvalidArgument, "features: need at least 2 bins");
  FeatureExtractor fx;
  fx.references = build_references(train, dba_iterations);
  fx.bins = bins;
  fx.theta = theta;
  bool first = true;
  for (const auto &s : train.samples) {
    for (double r : residual_sequence(s, fx.references, theta)) {
      if (first) {
        fx.range = {r, r};
        first = false;
      }
      fx.range.lo = std::min(fx.range.lo, r);
      fx.range.hi = std::max(fx.range.hi, r);
    }
  }
  return fx;
}

HandcraftedFeatures extract_feature_vector(const dataset::MultistreamSample &sample,
                                           const StreamReferences &refs, int bins, double theta,
                                           std::optional<BinRange> range) {
  const auto res = residual_sequence(sample, refs, theta);
  BinRange r;
  if (range) {
    r = *range;
  } else {
    const auto [mn, mx] = std::minmax_element(res.begin(), res.end());
    r = {*mn, *mx};
  }
  return features_from_residuals(res, bins, r.lo, r.hi);
}

HandcraftedFeatures extract_feature_vector(const dataset::MultistreamSample &sample,
                                           const FeatureExtractor &fx) {
  return extract_feature_vector(sample, fx.references, fx.bins, fx.theta, fx.range);
}

std::string cohort_group(bool chronic_pain, dataset::TrialKind kind) {
  return std::string(chronic_pain ? "cp-" : "healthy-") + dataset::to_string(kind);
}

std::vector<CdfPoint> export_feature_cdf(
    const std::map<std::string, std::vector<HandcraftedFeatures>> &groups,
    std::vector<std::string> *skipped) {
  std::vector<CdfPoint> out;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    for (const auto &[name, members] : groups) {
      if (members.empty()) {
        if (skipped && f == 0) skipped->push_back(name);
        continue;
      }
      std::vector<double> vals;
      for (const auto &m : members) vals.push_back(m.values[f]);
      std::sort(vals.begin(), vals.end());
      const double n = static_cast<double>(vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i + 1 < vals.size() && vals[i + 1] == vals[i]) continue;
        out.push_back({f, name, vals[i], static_cast<double>(i + 1) / n});
      }
    }
  }
  return out;
}

std::string cdf_to_csv(const std::vector<CdfPoint> &points) {
  std::ostringstream os;
  os << "feature,group,value,cum_prob\n";
  for (const auto &p : points) {
    os << 'd' << p.feature + 1 << ',' << p.group << ',' << text::format_double(p.value) << ','
       << text::format_double(p.cum_prob) << '\n';
  }
  return os.str();
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::InvalidArgument, "ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace painrnn::dtwfeat
