// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "painrnn/dataset.hpp"
#include "painrnn/dtwfeat/dtw.hpp"
#include "painrnn/dtwfeat/features.hpp"

using namespace painrnn;
using namespace painrnn::dtwfeat;

namespace {

SymbolDistribution random_distribution(std::mt19937_64 &rng, int bins) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(static_cast<std::size_t>(bins));
  double s = 0;
  for (auto &v : p) s += (v = e(rng));
  for (auto &v : p) v /= s;
  SymbolDistribution d;
  d.p = p;
  return d;
}

std::vector<std::uint8_t> bits_of(const std::string &s) {
  std::vector<std::uint8_t> b;
  for (char c : s) b.push_back(c == '1' ? 1 : 0);
  return b;
}

}  // namespace

TEST_CASE("symbolize bins equal-width cells and clamps the edges") {
  const std::vector<double> v{0.0, 0.24, 0.25, 0.99, 1.0, -3.0, 7.0};
  const auto s = symbolize(v, 4, 0.0, 1.0);
  CHECK(s.symbols == std::vector<int>{0, 0, 1, 3, 3, 0, 3});
  CHECK(s.distribution.p[0] == doctest::Approx(3.0 / 7));
  const auto flat = symbolize(std::vector<double>{2, 2, 2}, 4, 2, 2);
  CHECK(flat.symbols == std::vector<int>{0, 0, 0});
  CHECK(flat.distribution.p[0] == 1.0);
  CHECK_THROWS_AS(symbolize(std::vector<double>{1.0}, 1, 0, 1), Error);
  CHECK_THROWS_AS(symbolize(std::vector<double>{}, 4, 0, 1), Error);
  CHECK_THROWS_AS(symbolize(std::vector<double>{std::nan("")}, 4, 0, 1), Error);
}

TEST_CASE("distribution validation") {
  CHECK_NOTHROW(SymbolDistribution::from_probabilities({0.25, 0.75}));
  CHECK_THROWS_AS(SymbolDistribution::from_probabilities({0.5, 0.6}), Error);
  CHECK_THROWS_AS(SymbolDistribution::from_probabilities({-0.5, 1.5}), Error);
  CHECK_THROWS_AS(SymbolDistribution::from_probabilities({}), Error);
}

TEST_CASE("entropy of simple distributions") {
  const auto uniform = SymbolDistribution::from_probabilities({0.25, 0.25, 0.25, 0.25});
  CHECK(shannon_entropy(uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(renyi_entropy(uniform, 2.0) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(simpson_diversity(uniform) == 0.25);
  const auto point = SymbolDistribution::from_probabilities({0, 1, 0});
  CHECK(shannon_entropy(point) == 0.0);
  CHECK(renyi_entropy(point, 2.0) == 0.0);
  CHECK(simpson_diversity(point) == 1.0);
  CHECK_THROWS_AS(renyi_entropy(uniform, 1.0), Error);
  CHECK_THROWS_AS(renyi_entropy(uniform, 0.0), Error);
}

TEST_CASE("entropy identities on random distributions") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int bins = 2 + static_cast<int>(rng() % 30);
    const auto p = random_distribution(rng, bins);
    const double h = shannon_entropy(p);
    CHECK(std::abs(renyi_entropy(p, 2.0) + std::log(simpson_diversity(p))) <= 1e-12);
    CHECK(h <= std::log(static_cast<double>(bins)) + 1e-12);
    CHECK(renyi_entropy(p, 2.0) <= h + 1e-12);
    CHECK(renyi_entropy(p, 3.0) <= renyi_entropy(p, 2.0) + 1e-12);
    CHECK(renyi_entropy(p, 0.5) >= h - 1e-12);
  }
}

TEST_CASE("LZ76 phrase counts of reference strings") {
  // Kaspar-Schuster parse: 0|001|10|100|1000|101
  CHECK(lz76_phrase_count(bits_of("0001101001000101")) == 6);
  CHECK(lz76_phrase_count(bits_of("0000000000000000")) == 2);
  CHECK(lz76_phrase_count(bits_of("0101010101010101")) == 3);
  CHECK(lz76_phrase_count(bits_of("01")) == 2);
  CHECK_THROWS_AS(lz76_phrase_count(bits_of("1")), Error);
}

TEST_CASE("normalized LZ76 of constant and alternating strings") {
  // c log2(n) / n with n = 64: constant c = 2, alternating c = 3.
  CHECK(lz76_normalized(std::vector<std::uint8_t>(64, 0)) == 0.1875);
  std::vector<std::uint8_t> alt(64);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;
  CHECK(lz76_normalized(alt) == 0.28125);
}

TEST_CASE("normalized LZ76 of random bits approaches one") {
  std::mt19937_64 rng(99);
  std::vector<double> v(4096);
  std::normal_distribution<double> g;
  for (auto &x : v) x = g(rng);
  const double c = lz76_complexity(v);
  CHECK(c >= 0.8);
  CHECK(c <= 1.0);
}

TEST_CASE("LZ76 of a doubled string grows by at most two phrases") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> s(2 + rng() % 60);
    for (auto &b : s) b = rng() & 1;
    std::vector<std::uint8_t> ss(s);
    ss.insert(ss.end(), s.begin(), s.end());
    CHECK(lz76_phrase_count(ss) <= lz76_phrase_count(s) + 2);
    CHECK(lz76_phrase_count(ss) >= lz76_phrase_count(s));
  }
}

TEST_CASE("median binarization") {
  // median 2.5: values above it map to 1 -> 0011, which parses as 0|01|1.
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(lz76_complexity(v) == doctest::Approx(std::min(1.0, 3.0 * 2.0 / 4.0)));
}

TEST_CASE("composite features") {
  const std::vector<int> sym{0, 1, 0, 2};
  const auto c = composite_features(0.5, sym, 0.3);
  CHECK(c.space_filling == 0.5);
  CHECK(c.expressiveness == 1.0);
  CHECK(c.perturbation == doctest::Approx(0.6));
  CHECK(c.diversity == std::exp(0.5));
  const auto z = composite_features(0.0, std::vector<int>{0, 0}, 0.4);
  CHECK(z.space_filling == 0.0);
  CHECK(z.expressiveness == 0.0);
  CHECK(z.perturbation == 0.0);
  CHECK(z.diversity == 1.0);
}

TEST_CASE("feature vector from residuals") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 3);
  std::vector<double> r(200);
  for (auto &x : r) x = u(rng);
  const auto f = features_from_residuals(r, 16, 0.0, 3.0);
  CHECK(f.diversity() == std::exp(f.shannon()));
  CHECK(std::abs(f.renyi() + std::log(f.simpson())) <= 1e-12);
  CHECK(f.expressiveness() == doctest::Approx(f.shannon() / f.space_filling()));
  CHECK(f.perturbation() == doctest::Approx(f.lempel_ziv() / f.shannon()));
  for (double v : f.values) CHECK(std::isfinite(v));
}

TEST_CASE("residuals follow the DTW path of every stream") {
  dataset::SynthConfig c;
  c.n_subjects = 2;
  c.trials_per_subject = 2;
  c.length_min = 10;
  c.length_max = 12;
  const auto ds = dataset::synthesize_dataset(c);
  const auto refs = build_references(ds, 2);
  for (std::size_t k = 0; k < refs.size(); ++k) CHECK(refs[k].cols() == dataset::kStreamChannels[k]);
  const auto &s = ds.samples[0];
  const auto res = residual_sequence(s, refs);
  std::size_t expected = 0;
  double sum_sq = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto al = dtw(s.stream(k), refs[k]);
    expected += al.path.size();
    sum_sq += al.cost;
  }
  REQUIRE(res.size() == expected);
  double got = 0;
  for (double x : res) got += x * x;
  CHECK(got == doctest::Approx(sum_sq).epsilon(1e-10));
}

TEST_CASE("extractor bins over the training residual range") {
  dataset::SynthConfig c;
  c.n_subjects = 2;
  c.trials_per_subject = 3;
  c.length_min = 10;
  c.length_max = 12;
  const auto ds = dataset::synthesize_dataset(c);
  const auto fx = fit_feature_extractor(ds, 8, 2.0, 2);
  CHECK(fx.bins == 8);
  CHECK(fx.range.lo < fx.range.hi);
  for (const auto &s : ds.samples) {
    const auto r = residual_sequence(s, fx.references);
    for (double x : r) {
      CHECK(x >= fx.range.lo);
      CHECK(x <= fx.range.hi);
    }
    const auto f = extract_feature_vector(s, fx);
    CHECK(f.values == features_from_residuals(r, 8, fx.range.lo, fx.range.hi).values);
  }
}

TEST_CASE("cohort groups and empirical CDF export") {
  CHECK(cohort_group(false, dataset::TrialKind::Normal) == "healthy-normal");
  CHECK(cohort_group(true, dataset::TrialKind::Difficult) == "cp-difficult");
  HandcraftedFeatures a, b, d;
  a.values.fill(1.0);
  b.values.fill(2.0);
  d.values.fill(1.0);
  std::vector<std::string> skipped;
  const auto pts = export_feature_cdf({{"cp-normal", {a, b, d}}, {"healthy-normal", {}}}, &skipped);
  CHECK(skipped == std::vector<std::string>{"healthy-normal"});
  REQUIRE(pts.size() == 16);
  CHECK(pts[0].feature == 0);
  CHECK(pts[0].group == "cp-normal");
  CHECK(pts[0].value == 1.0);
  CHECK(pts[0].cum_prob == doctest::Approx(2.0 / 3));
  CHECK(pts[1].value == 2.0);
  CHECK(pts[1].cum_prob == 1.0);
  const std::string csv = cdf_to_csv(pts);
  CHECK(csv.rfind("feature,group,value,cum_prob\n", 0) == 0);
  CHECK(csv.find("d8,cp-normal,2,1\n") != std::string::npos);
}

TEST_CASE("two-sample KS statistic") {
  CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_statistic({1, 2}, {5, 6}) == 1.0);
  CHECK(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}) == 0.5);
  CHECK_THROWS_AS(ks_statistic({}, {1}), Error);
}

TEST_CASE("Shannon entropy separates protective from non-protective trials") {
  // Frozen bound measured on the default synthetic cohort.
  const auto raw = dataset::synthesize_dataset(dataset::SynthConfig{});
  const auto ds = dataset::normalize(raw, dataset::fit_channel_stats(raw));
  const auto fx = fit_feature_extractor(ds);
  std::vector<double> prot, other;
  for (const auto &s : ds.samples) (s.protective ? prot : other).push_back(extract_feature_vector(s, fx).shannon());
  CHECK(ks_statistic(prot, other) > 0.2);
}
