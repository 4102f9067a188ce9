// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "painrnn/dataset.hpp"
#include "painrnn/srnn/train.hpp"

using namespace painrnn;
using namespace painrnn::srnn;

namespace {

dataset::Dataset cohort() {
  dataset::SynthConfig c;
  c.n_subjects = 2;
  c.trials_per_subject = 4;
  c.length_min = 10;
  c.length_max = 12;
  const auto raw = dataset::synthesize_dataset(c);
  return dataset::normalize(raw, dataset::fit_channel_stats(raw));
}

EnsembleConfig small_model() {
  EnsembleConfig c;
  c.hidden = {8, 8, 4};
  c.max_length = 32;
  return c;
}

}  // namespace

TEST_CASE("default schedule is 70/30/30 epochs at decreasing rates") {
  TrainConfig cfg;
  CHECK(cfg.total_epochs() == 130);
  CHECK(cfg.batch_size == 8);
  CHECK(cfg.learning_rate_at(1) == 1e-2);
  CHECK(cfg.learning_rate_at(70) == 1e-2);
  CHECK(cfg.learning_rate_at(71) == 1e-3);
  CHECK(cfg.learning_rate_at(100) == 1e-3);
  CHECK(cfg.learning_rate_at(101) == 1e-4);
  CHECK(cfg.learning_rate_at(130) == 1e-4);
  CHECK_THROWS_AS(cfg.learning_rate_at(0), Error);
  CHECK_THROWS_AS(cfg.learning_rate_at(131), Error);
  CHECK(cfg.adam.beta1 == 0.9);
  CHECK(cfg.adam.epsilon == 1e-8);
  CHECK(cfg.adam.weight_decay == 1e-4);
}

TEST_CASE("schedule validation") {
  TrainConfig cfg;
  cfg.schedule = {{0, 1e-2}};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.schedule = {{5, -1.0}};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.adam.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("Adam steps match a hand-rolled recurrence") {
  AdamConfig ac;
  ac.weight_decay = 0.01;
  Adam opt(ac);
  double x[2] = {0.5, -1.5};
  double g[2] = {0.0, 0.0};
  const std::vector<ParamView> pv{{"x", x, 2}}, gv{{"g", g, 2}};
  double rx[2] = {0.5, -1.5}, m[2] = {0, 0}, v[2] = {0, 0};
  const double lr = 0.1;
  for (int t = 1; t <= 5; ++t) {
    for (int k = 0; k < 2; ++k) g[k] = 2.0 * x[k] + 0.3 * k;
    opt.step(pv, gv, lr);
    for (int k = 0; k < 2; ++k) {
      const double gk = 2.0 * rx[k] + 0.3 * k;
      m[k] = 0.9 * m[k] + 0.1 * gk;
      v[k] = 0.999 * v[k] + 0.001 * gk * gk;
      const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
      rx[k] -= lr * (mh / (std::sqrt(vh) + 1e-8) + 0.01 * rx[k]);
      CHECK(x[k] == doctest::Approx(rx[k]).epsilon(1e-14));
    }
  }
  CHECK(opt.steps() == 5);
  double y[3] = {0, 0, 0};
  CHECK_THROWS_AS(opt.step({{"y", y, 3}}, {{"y", y, 3}}, lr), Error);
}

TEST_CASE("training lowers the loss and records the schedule") {
  const auto ds = cohort();
  TrainConfig cfg;
  cfg.schedule = {{6, 1e-2}, {3, 1e-3}, {3, 1e-4}};
  cfg.batch_size = 4;
  cfg.seed = 3;
  const auto res = train(ds, small_model(), cfg);
  REQUIRE(res.trace.size() == 12);
  for (int e = 0; e < 12; ++e) {
    CHECK(res.trace[e].epoch == e + 1);
    CHECK(res.trace[e].learning_rate == cfg.learning_rate_at(e + 1));
    CHECK(std::isfinite(res.trace[e].mean_loss));
  }
  CHECK(res.trace.back().mean_loss < res.trace.front().mean_loss);
}

TEST_CASE("training is deterministic") {
  const auto ds = cohort();
  TrainConfig cfg;
  cfg.schedule = {{3, 1e-2}};
  cfg.seed = 9;
  auto a = train(ds, small_model(), cfg);
  auto b = train(ds, small_model(), cfg);
  for (std::size_t e = 0; e < a.trace.size(); ++e) CHECK(a.trace[e].mean_loss == b.trace[e].mean_loss);
  auto va = param_views(a.model), vb = param_views(b.model);
  for (std::size_t t = 0; t < va.size(); ++t)
    for (Index k = 0; k < va[t].size; ++k) CHECK(va[t].data[k] == vb[t].data[k]);
}

TEST_CASE("non-finite loss raises a divergence error") {
  auto ds = cohort();
  ds.samples[0].angles(0, 0) = 1e200;
  TrainConfig cfg;
  cfg.schedule = {{1, 1e-2}};
  try {
    train(ds, small_model(), cfg);
    FAIL("expected divergence");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::Divergence);
  }
}

TEST_CASE("empty dataset is rejected") {
  dataset::Dataset empty;
  CHECK_THROWS_AS(train(empty, small_model(), TrainConfig{}), Error);
}
