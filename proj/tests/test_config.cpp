/*
 Copyright 2026 The quadtune authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "quadtune/config.hpp"

using namespace qtune;
using nlohmann::json;

TEST_CASE("empty config yields the defaults") {
  const ExperimentConfig cfg = config_from_json(json::object());
  const ExperimentConfig def;
  CHECK(cfg.seed == def.seed);
  CHECK(cfg.horizon == def.horizon);
  CHECK(cfg.vehicle.m == def.vehicle.m);
  CHECK(cfg.training.epochs == def.training.epochs);
  CHECK(config_to_json(cfg) == config_to_json(def));
}

TEST_CASE("round trip: serialize, parse, serialize is stable") {
  ExperimentConfig cfg;
  cfg.seed = 42;
  cfg.horizon = 500;
  cfg.vehicle.m = 1.3;
  cfg.training.adam.lr = 5e-4;
  cfg.task_category = "figure8";
  const json j = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.seed == 42);
  CHECK(back.vehicle.m == 1.3);
  CHECK(back.training.adam.lr == 5e-4);
  CHECK(back.task_category == "figure8");
}

TEST_CASE("partial config keeps defaults elsewhere") {
  const json j = {{"rollout", {{"horizon_steps", 250}}}};
  const ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.horizon == 250);
  CHECK(cfg.stride == 5);
  CHECK(cfg.vehicle.g == 9.81);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_AS(config_from_json({{"sead", 1}}), ConfigError);
  try {
    config_from_json({{"vehicle", {{"mass", 1.0}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("vehicle.mass") != std::string::npos);
  }
}

TEST_CASE("malformed values are config errors") {
  CHECK_THROWS_AS(config_from_json({{"vehicle", {{"mass_kg", "heavy"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"vehicle", {{"inertia_diag_kgm2", {1.0, 2.0}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json({{"vehicle", {{"mass_kg", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"rollout", {{"horizon_steps", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
}

TEST_CASE("bounds ordering is validated") {
  json j;
  j["bounds"]["lo"] = std::vector<double>(18, 5.0);
  j["bounds"]["hi"] = std::vector<double>(18, 1.0);
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("the committed default config file matches the built-in defaults") {
  // Locate configs/default.json relative to this source file.
  const std::filesystem::path here = std::filesystem::path(__FILE__).parent_path();
  const std::filesystem::path path = here / ".." / "configs" / "default.json";
  REQUIRE(std::filesystem::exists(path));
  const ExperimentConfig cfg = load_config(path.string());
  CHECK(config_to_json(cfg) == default_config_json());
}

TEST_CASE("config hash is stable and key-order independent input changes it") {
  const json a = default_config_json();
  json b = a;
  b["seed"] = 2;
  CHECK(config_hash(a) == config_hash(default_config_json()));
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("atomic write replaces content completely") {
  const std::string path = "config_atomic_test.txt";
  write_file_atomic(path, "first version with a long body\n");
  write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body == "second\n");
  std::filesystem::remove(path);
}

TEST_CASE("manifest records hash, seed and revision") {
  ExperimentConfig cfg;
  cfg.seed = 9;
  const std::string path = "config_manifest_test.json";
  write_manifest(path, cfg, 12.5);
  std::ifstream in(path);
  json m;
  in >> m;
  CHECK(m["schema"] == "quadtune-manifest-v1");
  CHECK(m["seed"] == 9);
  CHECK(m["config_hash"] == config_hash(config_to_json(cfg)));
  CHECK(m.contains("revision"));
  CHECK(m["wall_time_ms"] == 12.5);
  CHECK(m["config"]["vehicle"]["mass_kg"] == 1.0);
  std::filesystem::remove(path);
}

TEST_CASE("derived configs inherit the shared fields") {
  ExperimentConfig cfg;
  cfg.seed = 77;
  cfg.horizon = 300;
  cfg.stride = 5;
  cfg.noise.sigma_p = 0.01;
  const TrainConfig t = cfg.train_config();
  CHECK(t.seed == 77);
  CHECK(t.horizon == 300);
  CHECK(t.noise.sigma_p == 0.01);
  const TuneConfig u = cfg.tune_config();
  CHECK(u.horizon == 300);
  const RolloutConfig r = cfg.rollout_config();
  CHECK(r.seed == 77);
  const Task task = cfg.default_task();
  CHECK(task.total_duration() >= cfg.horizon * cfg.vehicle.dt - 1e-9);
}
