// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "painrnn/dataset.hpp"
#include "painrnn/srnn/ensemble.hpp"

using namespace painrnn;
using namespace painrnn::srnn;

namespace {

dataset::Dataset tiny_cohort() {
  dataset::SynthConfig c;
  c.n_subjects = 2;
  c.trials_per_subject = 2;
  c.length_min = 10;
  c.length_max = 13;
  return dataset::synthesize_dataset(c);
}

EnsembleConfig small_cfg(Framework fw = Framework::Shared) {
  EnsembleConfig c;
  c.hidden = {6, 5, 3};
  c.framework = fw;
  c.max_length = 64;
  return c;
}

EnsembleModel densify(EnsembleModel m) {
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    m.aes[i].encoder_wiring = dense_wiring(m.config.skip[i], m.config.max_length);
    m.aes[i].decoder_wiring = dense_wiring(m.config.skip[i], m.config.max_length);
  }
  return m;
}

}  // namespace

TEST_CASE("default configuration gives a 320-dim latent") {
  EnsembleConfig c;
  CHECK(c.latent_dim() == 320);
  CHECK(c.hidden == std::vector<Index>{128, 128, 64});
  CHECK(c.skip == std::vector<int>{3, 3, 2});
  CHECK(c.l1_weight == 0.005);
  const auto ds = tiny_cohort();
  const auto m = make_ensemble(c, 1);
  const VectorXd z = encode_shared(m, ds.samples[0]);
  CHECK(z.size() == 320);
  CHECK(z.allFinite());
}

TEST_CASE("config validation") {
  EnsembleConfig c;
  c.skip = {0, 3, 2};
  CHECK_THROWS_AS(c.validate(), Error);
  c = EnsembleConfig{};
  c.hidden = {128, 128};
  CHECK_THROWS_AS(c.validate(), Error);
  c = EnsembleConfig{};
  c.l1_weight = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_framework("IF") == Framework::Independent);
  CHECK_THROWS_AS(parse_framework("XF"), Error);
}

TEST_CASE("construction is deterministic in the seed") {
  auto a = make_ensemble(small_cfg(), 4);
  auto b = make_ensemble(small_cfg(), 4);
  auto c = make_ensemble(small_cfg(), 5);
  auto va = param_views(a), vb = param_views(b), vc = param_views(c);
  REQUIRE(va.size() == vb.size());
  bool differs = false;
  for (std::size_t t = 0; t < va.size(); ++t)
    for (Index k = 0; k < va[t].size; ++k) {
      CHECK(va[t].data[k] == vb[t].data[k]);
      differs |= va[t].data[k] != vc[t].data[k];
    }
  CHECK(differs);
  for (std::size_t i = 0; i < a.aes.size(); ++i) CHECK(a.aes[i].encoder_wiring.steps == b.aes[i].encoder_wiring.steps);
}

TEST_CASE("final encoder states lie strictly inside (-1, 1)") {
  const auto ds = tiny_cohort();
  auto m = make_ensemble(small_cfg(), 2);
  for (auto &ae : m.aes) ae.encoder.Wh *= 20.0;
  const auto batch = make_sequence_batch(ds.samples[0]);
  for (std::size_t i = 0; i < 3; ++i) {
    const MatrixXd h = encoder_final_state(m, i, batch);
    CHECK(h.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("independent framework latent is the concatenated final states") {
  const auto ds = tiny_cohort();
  const auto m = make_ensemble(small_cfg(Framework::Independent), 3);
  CHECK(m.aes[0].shared_proj.size() == 0);
  const auto batch = make_sequence_batch(ds.samples[1]);
  const MatrixXd z = encode_shared(m, batch);
  CHECK(z.topRows(6) == encoder_final_state(m, 0, batch));
  CHECK(z.middleRows(6, 5) == encoder_final_state(m, 1, batch));
  CHECK(z.bottomRows(3) == encoder_final_state(m, 2, batch));
}

TEST_CASE("dense wiring matches the element-wise reference") {
  const auto ds = tiny_cohort();
  const auto m = densify(make_ensemble(small_cfg(), 8));
  const auto &s = ds.samples[2];
  const auto ref = oracle::dense_shared_forward(m, {s.angles, s.energies, s.emg});
  const VectorXd z = encode_shared(m, s);
  CHECK((z - ref.latent).cwiseAbs().maxCoeff() < 1e-12);
  const auto rec = decode_ensemble(m, z, s.length());
  for (std::size_t i = 0; i < 3; ++i) CHECK((rec[i] - ref.recon[i]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss equals reconstruction error plus weighted L1 over the batch") {
  const auto ds = tiny_cohort();
  const auto m = make_ensemble(small_cfg(), 6);
  std::vector<dataset::MultistreamSample> two{dataset::truncate(ds.samples[0], 6),
                                              dataset::truncate(ds.samples[1], 6)};
  const auto batch = make_sequence_batch(two);
  const MatrixXd z = encode_shared(m, batch);
  const auto rec = decode_ensemble(m, z, 6);
  double sq = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (Index t = 0; t < 6; ++t) sq += (batch.streams[i][t] - rec[i][t]).squaredNorm();
  const double expect = (sq + 0.005 * z.cwiseAbs().sum()) / 2.0;
  CHECK(ensemble_loss(m, batch) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("shape errors are reported") {
  const auto ds = tiny_cohort();
  const auto m = make_ensemble(small_cfg(), 1);
  auto s = ds.samples[0];
  s.emg = MatrixXd::Zero(s.length(), 3);
  CHECK_THROWS_AS(encode_shared(m, s), Error);
  CHECK_THROWS_AS(decode_ensemble(m, VectorXd(VectorXd::Zero(5)), 4), Error);
  auto long_cfg = small_cfg();
  long_cfg.max_length = 4;
  const auto short_model = make_ensemble(long_cfg, 1);
  CHECK_THROWS_AS(encode_shared(short_model, ds.samples[0]), Error);
}

TEST_CASE("gradients match central differences on tiny ensembles") {
  std::mt19937_64 rng(2024);
  for (Framework fw : {Framework::Shared, Framework::Independent}) {
    for (int trial = 0; trial < 6; ++trial) {
      const auto prob = gradcheck::tiny_problem(rng, fw);
      const auto rep = gradcheck::check(prob);
      INFO("worst " << rep.worst_name << " rel " << rep.worst_rel);
      CHECK(rep.worst_rel <= 1e-4);
      CHECK(rep.checked == param_count(prob.model));
    }
  }
}
