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

#ifndef QUADTUNE_CONFIG_HPP
#define QUADTUNE_CONFIG_HPP

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "quadtune/trainer.hpp"

namespace qtune {

/// Raised for malformed config files; the CLI maps it to exit code 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * One experiment = one config file. Every field has a default; keys absent
 * from the file keep it, unknown keys are rejected. Physical quantities are
 * unit-suffixed in the schema (_kg, _s, _mps, _nm, ...).
 */
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  QuadParams vehicle;
  LossSpec loss;
  GainBounds bounds;
  DifficultyConfig difficulty;

  int horizon = 1000;
  int stride = 5;
  NoiseConfig noise;

  TrainConfig training;      // epochs/batch/adam; shares the fields above
  TuneConfig tuning;
  int checkpoint_every = 25;

  std::string task_category = "2d_circle";
  double task_speed = 2.0;       // [m/s]
  double task_wind = 1.0;        // [N m]

  /// Rollout/train/tune configs assembled from the shared fields.
  RolloutConfig rollout_config() const;
  TrainConfig train_config() const;
  TuneConfig tune_config() const;
  Task default_task() const;
};

/// The config schema with all defaults, as JSON.
nlohmann::json default_config_json();

/// Parse + validate. Unknown keys anywhere raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Effective (fully defaulted) JSON for the manifest echo.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// FNV-1a hash of the canonical serialized config.
std::string config_hash(const nlohmann::json& j);

/// Atomic overwrite: write to a temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Standard run manifest written next to every command's outputs.
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    double wall_time_ms);

}  // namespace qtune

#endif  // QUADTUNE_CONFIG_HPP
