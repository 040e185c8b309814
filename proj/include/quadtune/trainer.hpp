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

#ifndef QUADTUNE_TRAINER_HPP
#define QUADTUNE_TRAINER_HPP

#include <optional>
#include <string>
#include <vector>

#include "quadtune/gradients.hpp"
#include "quadtune/policy.hpp"

namespace qtune {

/// Per-window artifacts of a policy-driven rollout, needed to backpropagate
/// the meta-gradient.
struct PolicyTrace {
  std::vector<PolicyCache> caches;
  std::vector<Vec18> etas;
  std::vector<int> update_steps;
  std::vector<double> update_times;
};

/// Closed loop with gains produced by the policy from the live estimate at
/// every update instant.
RolloutRecord rollout_with_policy(const PolicyParams& policy, const Task& task,
                                  const QuadParams& prm, const LossSpec& spec,
                                  const RolloutConfig& cfg, const GainBounds& bounds,
                                  PolicyTrace* trace = nullptr);

/// Exact gradient of the rollout loss w.r.t. the policy weights, via the
/// policy-aware adjoint (the estimate feeding the features is itself part of
/// the differentiated loop). Accumulates into `acc`; returns the loss.
double policy_meta_gradient(const PolicyParams& policy, const Task& task,
                            const QuadParams& prm, const LossSpec& spec,
                            const RolloutConfig& cfg, const GainBounds& bounds,
                            PolicyGrads& acc, bool* crashed = nullptr,
                            double* rmse = nullptr);

struct TrainConfig {
  int epochs = 200;
  int batch = 8;           // tasks per epoch (M)
  int horizon = 1000;      // inner steps per rollout (N)
  int stride = 5;
  std::uint64_t seed = 1;
  NoiseConfig noise;
  DifficultyConfig difficulty;
  AdamConfig adam;
  QuadParams params;
  LossSpec loss;
  GainBounds bounds;
};

struct EpochResult {
  double mean_loss = 0.0;
  double mean_rmse = 0.0;
  int crashes = 0;
  bool updated = false;   // false when every task in the batch crashed
};

/// One meta-training epoch: sample `batch` tasks from (seed, epoch), average
/// the per-task meta-gradients over the non-crashed rollouts, Adam step.
EpochResult train_epoch(PolicyParams& policy, const TrainConfig& cfg, int epoch);

// --- Gain tuning (no policy) ---------------------------------------------

enum class TuneMethod {
  kDtBase,      // forward sensitivity, controller gains only
  kDtFixed,     // forward sensitivity, all 18 gains
  kDtCtg,       // per-window cost-to-go forward gradients
  kDtHistory,   // per-window single-pass history gradients (known flawed)
  kAdjFixed,    // adjoint, all 18 gains
  kAdjAdaptive  // adjoint, per-window gains
};

std::string tune_method_name(TuneMethod m);
TuneMethod tune_method_from_name(const std::string& name);

struct TuneConfig {
  int iterations = 200;
  double lr = 0.05;
  AdamConfig adam;         // lr overridden by `lr`
  std::uint64_t seed = 1;
  int horizon = 1000;
  int stride = 5;
  NoiseConfig noise;
  QuadParams params;
  LossSpec loss;
  GainBounds bounds;
};

struct TuneResult {
  std::vector<double> loss_curve;   // one entry per iteration
  std::vector<double> rmse_curve;
  GainTrajectory gains;             // final gains
  bool diverged = false;
};

/// Gradient-descent gain tuning on one task with the selected method. Fixed
/// methods optimize a single Theta; adaptive methods one Theta per window.
/// Iterates Adam with projection onto the safety box.
TuneResult tune_gains(const Task& task, const Vec18& theta0, TuneMethod method,
                      const TuneConfig& cfg);

// --- Evaluation ----------------------------------------------------------

struct EvalCase {
  std::string category;
  double wind = 0.0;       // torque magnitude [N m]
  double speed = 0.0;      // [m/s]
};

struct EvalRow {
  EvalCase c;
  std::string method;
  double mean_rmse = 0.0;
  double sd_rmse = 0.0;
  int crashes = 0;
  int repeats = 0;
};

/// The preset evaluation grid: wind {0,1,2} x speed {2,3,4} x all categories.
std::vector<EvalCase> default_eval_grid();

struct EvalConfig {
  int repeats = 3;
  std::uint64_t seed = 7;
  int horizon = 1000;
  int stride = 5;
  NoiseConfig noise;
  PerturbationConfig perturb;   // enabled for the transfer suite
  QuadParams params;
  LossSpec loss;
  GainBounds bounds;
};

/// Evaluate a fixed gain vector over the grid.
std::vector<EvalRow> evaluate_fixed(const Vec18& theta, const std::string& method,
                                    const std::vector<EvalCase>& grid,
                                    const EvalConfig& cfg);

/// Evaluate the policy over the grid.
std::vector<EvalRow> evaluate_policy(const PolicyParams& policy, const std::string& method,
                                     const std::vector<EvalCase>& grid,
                                     const EvalConfig& cfg);

/// Serialize rows as "wind,velocity,method,category,mean,sd,crashes".
std::string eval_rows_csv(const std::vector<EvalRow>& rows);

}  // namespace qtune

#endif  // QUADTUNE_TRAINER_HPP
