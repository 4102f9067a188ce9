// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "painrnn/config.hpp"
#include "painrnn/text.hpp"

using namespace painrnn;
using namespace painrnn::config;

TEST_CASE("defaults resolve to the reference model") {
  const auto c = RunConfig::defaults();
  const auto p = c.pipeline();
  CHECK(p.model.latent_dim() == 320);
  CHECK(p.train.total_epochs() == 130);
  CHECK(p.train.batch_size == 8);
  CHECK(p.repetitions == 5);
  CHECK(p.task == pipeline::Task::MultiLabel);
  CHECK(p.cells.size() == 1);
  CHECK(p.features.bins == 16);
  CHECK(!c.trial_kind().has_value());
  CHECK(c.synth().n_subjects == 6);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(RunConfig::from_text("hiden = 4\n", "cfg", "."), Error);
  auto c = RunConfig::defaults();
  CHECK_THROWS_AS(c.set("learning_rate", "0.1"), Error);
  CHECK_THROWS_AS(c.get("nope"), Error);
}

TEST_CASE("typed getters validate values") {
  auto c = RunConfig::defaults();
  c.set("seed", "abc");
  CHECK_THROWS_AS(c.get_int("seed"), Error);
  c = RunConfig::defaults();
  c.set("pain_bands", "maybe");
  CHECK_THROWS_AS(c.get_bool("pain_bands"), Error);
  c = RunConfig::defaults();
  c.set("hidden", "8,8");
  CHECK_THROWS_AS(c.pipeline(), Error);
  c = RunConfig::defaults();
  c.set("schedule", "5-0.1");
  CHECK_THROWS_AS(c.pipeline(), Error);
  c = RunConfig::defaults();
  c.set("ablation", "SF-XX");
  CHECK_THROWS_AS(c.pipeline(), Error);
  c = RunConfig::defaults();
  c.set("trial_kind", "easy");
  CHECK_THROWS_AS(c.trial_kind(), Error);
}

TEST_CASE("overrides reach the pipeline config") {
  auto c = RunConfig::from_text("hidden = 8, 6, 4\nschedule = 2:0.5, 1:0.25\npain_bands = true\n", "cfg", ".");
  c.set("ablation", "all");
  c.set("task", "binary");
  c.set("trial_kind", "difficult");
  const auto p = c.pipeline();
  CHECK(p.model.hidden == std::vector<Index>{8, 6, 4});
  REQUIRE(p.train.schedule.size() == 2);
  CHECK(p.train.schedule[1].learning_rate == 0.25);
  CHECK(p.codec.banded);
  CHECK(p.cells.size() == 4);
  CHECK(p.task == pipeline::Task::Binary);
  CHECK(c.trial_kind() == dataset::TrialKind::Difficult);
}

TEST_CASE("paths resolve against the config file directory") {
  const auto dir = std::filesystem::temp_directory_path() / "painrnn_config_paths";
  std::filesystem::create_directories(dir);
  text::write_file(dir / "run.cfg", "data = cohort\nmodel = /abs/model.json\n");
  const auto c = RunConfig::from_file(dir / "run.cfg");
  CHECK(c.get_path("data") == dir / "cohort");
  CHECK(c.get_path("model") == std::filesystem::path("/abs/model.json"));
  CHECK(c.get_path("classifier").empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("resolved text reloads to the same config and hash") {
  auto c = RunConfig::defaults();
  c.set("seed", "42");
  c.set("noise_scale", "0.05");
  const std::string text = c.resolved_text();
  const auto back = RunConfig::from_text(text, "resolved", ".");
  CHECK(back.resolved_text() == text);
  CHECK(back.hash() == c.hash());
  c.set("seed", "43");
  CHECK(back.hash() != c.hash());
  CHECK(RunConfig::known_keys().size() == 43);
}
