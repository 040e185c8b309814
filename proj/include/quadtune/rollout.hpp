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

#ifndef QUADTUNE_ROLLOUT_HPP
#define QUADTUNE_ROLLOUT_HPP

#include <functional>
#include <vector>

#include "quadtune/controller.hpp"
#include "quadtune/loss.hpp"

namespace qtune {

/// Per-step gains Theta_k = [theta(12), psi(6)], constant within each
/// zero-order-hold window of `stride` inner steps.
struct GainTrajectory {
  enum class Mode { kFixed, kAdaptive };
  Mode mode = Mode::kFixed;
  std::vector<Vec18> theta;  // fixed: size 1; adaptive: one entry per window

  static GainTrajectory fixed(const Vec18& v) {
    GainTrajectory g;
    g.mode = Mode::kFixed;
    g.theta = {v};
    return g;
  }
  static GainTrajectory adaptive(const Vec18& v, int windows) {
    GainTrajectory g;
    g.mode = Mode::kAdaptive;
    g.theta.assign(windows, v);
    return g;
  }

  const Vec18& at_window(int w) const {
    return mode == Mode::kFixed ? theta.front() : theta.at(w);
  }
};

/// Plant-model offsets for the sim-to-sim transfer check. The controller and
/// observer keep the nominal model.
struct PerturbationConfig {
  bool enabled = false;
  double mass_scale = 1.10;
  double inertia_scale = 1.20;
  double actuator_lag_tau = 0.03;  // first-order input lag time constant [s]
};

struct RolloutConfig {
  int horizon = 1000;       // N
  int stride = 5;           // gain update every `stride` steps (20 Hz at 10 ms)
  std::uint64_t seed = 0;   // drives the measurement noise stream
  NoiseConfig noise;
  PerturbationConfig perturb;
  double crash_pos_limit = 100.0;          // [m]
  const GainBounds* bounds = nullptr;      // optional per-step compliance check
};

/// Full record of one closed-loop execution; the input to every gradient
/// engine.
struct RolloutRecord {
  std::vector<RigidState> x;        // N+1
  std::vector<ObserverState> xhat;  // N+1
  std::vector<ControlInput> u;      // N (commanded)
  std::vector<Measurement> y;       // N
  std::vector<RefPoint> ref;        // N
  std::vector<Disturbance> d;       // N (realized wind)
  std::vector<Vec18> Theta;         // N (applied gains)
  std::vector<Eigen::Vector3d> fallback_b3d;  // N (singularity fallback input)
  std::vector<double> loss;         // N

  int stride = 5;
  QuadParams params;
  LossSpec spec;
  bool crashed = false;
  int crash_step = -1;
  double total_loss = 0.0;
  double rmse = 0.0;

  int steps() const { return static_cast<int>(u.size()); }
  int windows() const { return (steps() + stride - 1) / stride; }
};

/// Gain source callback, invoked at every update instant with the step index
/// and the current observer estimate.
using GainSourceFn = std::function<Vec18(int k, const ObserverState& xhat)>;

/// Initial condition on the reference with an exact estimate.
RigidState initial_state(const Task& task);
ObserverState initial_observer(const RigidState& x0);

/**
 * Sequential closed-loop rollout: wind evaluation, ZOH gain updates, control
 * law, measurement, observer update, plant step, stage loss. Divergence
 * (non-finite state or position beyond the crash limit) truncates the record
 * and sets the crash flag.
 */
RolloutRecord rollout_closed_loop(const Task& task, const QuadParams& prm,
                                  const LossSpec& spec, const RolloutConfig& cfg,
                                  const GainSourceFn& gains_at);

/// Convenience wrapper for a gain-trajectory source.
RolloutRecord rollout_closed_loop(const Task& task, const QuadParams& prm,
                                  const LossSpec& spec, const RolloutConfig& cfg,
                                  const GainTrajectory& gains);

}  // namespace qtune

#endif  // QUADTUNE_ROLLOUT_HPP
