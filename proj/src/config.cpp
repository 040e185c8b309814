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

#include "quadtune/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qtune {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void json_to_vec(const json& a, Eigen::Ref<Eigen::VectorXd> out, const std::string& key) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != out.size()) {
    throw ConfigError("config: '" + key + "' must be an array of " +
                      std::to_string(out.size()) + " numbers");
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!a[i].is_number()) {
      throw ConfigError("config: '" + key + "' must contain only numbers");
    }
    out(i) = a[i].get<double>();
  }
}

/// Every key present in `j` must exist at the same path in the default
/// schema; objects are checked recursively.
void reject_unknown_keys(const json& j, const json& schema, const std::string& path) {
  if (!j.is_object()) return;
  if (!schema.is_object()) {
    throw ConfigError("config: '" + path + "' is not a section");
  }
  for (const auto& [key, value] : j.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) {
      throw ConfigError("config: unknown key '" + here + "'");
    }
    reject_unknown_keys(value, schema.at(key), here);
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value type for '") + key + "'");
  }
}

void read_vec_if(const json& j, const char* key, Eigen::Ref<Eigen::VectorXd> out) {
  if (j.contains(key)) json_to_vec(j.at(key), out, key);
}

}  // namespace

RolloutConfig ExperimentConfig::rollout_config() const {
  RolloutConfig cfg;
  cfg.horizon = horizon;
  cfg.stride = stride;
  cfg.seed = seed;
  cfg.noise = noise;
  return cfg;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig cfg = training;
  cfg.horizon = horizon;
  cfg.stride = stride;
  cfg.seed = seed;
  cfg.noise = noise;
  cfg.difficulty = difficulty;
  cfg.params = vehicle;
  cfg.loss = loss;
  cfg.bounds = bounds;
  return cfg;
}

TuneConfig ExperimentConfig::tune_config() const {
  TuneConfig cfg = tuning;
  cfg.horizon = horizon;
  cfg.stride = stride;
  cfg.seed = seed;
  cfg.noise = noise;
  cfg.params = vehicle;
  cfg.loss = loss;
  cfg.bounds = bounds;
  return cfg;
}

Task ExperimentConfig::default_task() const {
  return make_preset(task_category, task_speed, task_wind, seed,
                     std::max(difficulty.min_duration, horizon * vehicle.dt));
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;

  j["vehicle"] = {
      {"mass_kg", cfg.vehicle.m},
      {"inertia_diag_kgm2", vec_to_json(cfg.vehicle.J)},
      {"gravity_mps2", cfg.vehicle.g},
      {"dt_s", cfg.vehicle.dt},
      {"thrust_max_factor", cfg.vehicle.f_max_factor},
      {"torque_max_nm", cfg.vehicle.tau_max},
  };

  j["loss"] = {
      {"state_weights", vec_to_json(cfg.loss.w_x)},
      {"estimate_weights", vec_to_json(cfg.loss.w_xhat)},
      {"control_penalty", cfg.loss.lambda_u},
  };

  j["bounds"] = {
      {"lo", vec_to_json(cfg.bounds.lo)},
      {"hi", vec_to_json(cfg.bounds.hi)},
  };

  j["rollout"] = {
      {"horizon_steps", cfg.horizon},
      {"stride_steps", cfg.stride},
      {"noise_sigma_p_m", cfg.noise.sigma_p},
      {"noise_sigma_v_mps", cfg.noise.sigma_v},
  };

  j["task"] = {
      {"category", cfg.task_category},
      {"speed_mps", cfg.task_speed},
      {"wind_nm", cfg.task_wind},
  };

  j["difficulty"] = {
      {"force_const_max_n", cfg.difficulty.force_const_max},
      {"force_amp_max_n", cfg.difficulty.force_amp_max},
      {"force_freq_max_hz", cfg.difficulty.force_freq_max},
      {"torque_max_nm", cfg.difficulty.torque_max},
      {"box_center_m", vec_to_json(cfg.difficulty.box_center)},
      {"box_half_m", vec_to_json(cfg.difficulty.box_half)},
      {"waypoint_count", cfg.difficulty.waypoint_count},
      {"min_duration_s", cfg.difficulty.min_duration},
      {"segment_time_min_s", cfg.difficulty.segment_time_min},
      {"segment_time_max_s", cfg.difficulty.segment_time_max},
  };

  j["training"] = {
      {"epochs", cfg.training.epochs},
      {"batch", cfg.training.batch},
      {"learning_rate", cfg.training.adam.lr},
      {"checkpoint_every", cfg.checkpoint_every},
  };

  j["tuning"] = {
      {"iterations", cfg.tuning.iterations},
      {"learning_rate", cfg.tuning.lr},
  };
  return j;
}

nlohmann::json default_config_json() { return config_to_json(ExperimentConfig{}); }

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(j, default_config_json(), "");

  ExperimentConfig cfg;
  read_if(j, "seed", cfg.seed);
  read_if(j, "output_dir", cfg.output_dir);

  if (j.contains("vehicle")) {
    const json& v = j.at("vehicle");
    read_if(v, "mass_kg", cfg.vehicle.m);
    Eigen::VectorXd inertia = cfg.vehicle.J;
    read_vec_if(v, "inertia_diag_kgm2", inertia);
    cfg.vehicle.J = inertia;
    read_if(v, "gravity_mps2", cfg.vehicle.g);
    read_if(v, "dt_s", cfg.vehicle.dt);
    read_if(v, "thrust_max_factor", cfg.vehicle.f_max_factor);
    read_if(v, "torque_max_nm", cfg.vehicle.tau_max);
  }

  if (j.contains("loss")) {
    const json& l = j.at("loss");
    Eigen::VectorXd w = cfg.loss.w_x;
    read_vec_if(l, "state_weights", w);
    cfg.loss.w_x = w;
    w = cfg.loss.w_xhat;
    read_vec_if(l, "estimate_weights", w);
    cfg.loss.w_xhat = w;
    read_if(l, "control_penalty", cfg.loss.lambda_u);
  }

  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    Eigen::VectorXd v = cfg.bounds.lo;
    read_vec_if(b, "lo", v);
    cfg.bounds.lo = v;
    v = cfg.bounds.hi;
    read_vec_if(b, "hi", v);
    cfg.bounds.hi = v;
    if ((cfg.bounds.lo.array() >= cfg.bounds.hi.array()).any()) {
      throw ConfigError("config: bounds.lo must be elementwise below bounds.hi");
    }
  }

  if (j.contains("rollout")) {
    const json& r = j.at("rollout");
    read_if(r, "horizon_steps", cfg.horizon);
    read_if(r, "stride_steps", cfg.stride);
    read_if(r, "noise_sigma_p_m", cfg.noise.sigma_p);
    read_if(r, "noise_sigma_v_mps", cfg.noise.sigma_v);
    if (cfg.horizon <= 0 || cfg.stride <= 0) {
      throw ConfigError("config: rollout horizon and stride must be positive");
    }
  }

  if (j.contains("task")) {
    const json& t = j.at("task");
    read_if(t, "category", cfg.task_category);
    read_if(t, "speed_mps", cfg.task_speed);
    read_if(t, "wind_nm", cfg.task_wind);
  }

  if (j.contains("difficulty")) {
    const json& d = j.at("difficulty");
    read_if(d, "force_const_max_n", cfg.difficulty.force_const_max);
    read_if(d, "force_amp_max_n", cfg.difficulty.force_amp_max);
    read_if(d, "force_freq_max_hz", cfg.difficulty.force_freq_max);
    read_if(d, "torque_max_nm", cfg.difficulty.torque_max);
    Eigen::VectorXd v = cfg.difficulty.box_center;
    read_vec_if(d, "box_center_m", v);
    cfg.difficulty.box_center = v;
    v = cfg.difficulty.box_half;
    read_vec_if(d, "box_half_m", v);
    cfg.difficulty.box_half = v;
    read_if(d, "waypoint_count", cfg.difficulty.waypoint_count);
    read_if(d, "min_duration_s", cfg.difficulty.min_duration);
    read_if(d, "segment_time_min_s", cfg.difficulty.segment_time_min);
    read_if(d, "segment_time_max_s", cfg.difficulty.segment_time_max);
  }

  if (j.contains("training")) {
    const json& t = j.at("training");
    read_if(t, "epochs", cfg.training.epochs);
    read_if(t, "batch", cfg.training.batch);
    read_if(t, "learning_rate", cfg.training.adam.lr);
    read_if(t, "checkpoint_every", cfg.checkpoint_every);
    if (cfg.training.epochs < 0 || cfg.training.batch <= 0 || cfg.checkpoint_every <= 0) {
      throw ConfigError("config: training epochs/batch/checkpoint_every out of range");
    }
  }

  if (j.contains("tuning")) {
    const json& t = j.at("tuning");
    read_if(t, "iterations", cfg.tuning.iterations);
    read_if(t, "learning_rate", cfg.tuning.lr);
    if (cfg.tuning.iterations <= 0 || cfg.tuning.lr <= 0.0) {
      throw ConfigError("config: tuning iterations and learning_rate must be positive");
    }
  }

  try {
    cfg.vehicle.validate();
    cfg.loss.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse failure in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const nlohmann::json& j) {
  const std::string canon = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64-bit
  for (const unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
  }
  fs::rename(tmp, target);
}

#ifndef QTUNE_REVISION
#define QTUNE_REVISION "unknown"
#endif

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    double wall_time_ms) {
  const nlohmann::json effective = config_to_json(cfg);
  nlohmann::json m;
  m["schema"] = "quadtune-manifest-v1";
  m["config_hash"] = config_hash(effective);
  m["seed"] = cfg.seed;
  m["revision"] = QTUNE_REVISION;
  m["wall_time_ms"] = wall_time_ms;
  m["config"] = effective;
  write_file_atomic(path, m.dump(2) + "\n");
}

}  // namespace qtune
