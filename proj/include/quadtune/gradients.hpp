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

#ifndef QUADTUNE_GRADIENTS_HPP
#define QUADTUNE_GRADIENTS_HPP

#include <string>
#include <vector>

#include "quadtune/rollout.hpp"

namespace qtune {

using Vec4 = Eigen::Matrix<double, 4, 1>;

/// Costate trajectories of the backward sweep. Terminal entries are zero.
struct AdjointBundle {
  std::vector<Vec12> lambda_x;    // N+1
  std::vector<Vec18> lambda_xhat; // N+1
  std::vector<Vec4> lambda_u;     // N
};

struct AdjointOptions {
  /// dTheta/dxhat at an update instant; supplied by the trainer when gains
  /// are produced by the policy from the live estimate. Empty for plain
  /// gain-trajectory rollouts.
  std::function<Eigen::Matrix<double, 18, 18>(int k)> policy_feedback;
  /// Test hook: added to df_dx(0,0) to verify gradient checks catch a broken
  /// Jacobian provider.
  double debug_jacobian_perturb = 0.0;
};

struct AdjointResult {
  AdjointBundle bundle;
  std::vector<Vec18> per_step;    // grad of L w.r.t. Theta_k, per inner step
  std::vector<Vec18> per_window;  // summed over each ZOH window
  Vec18 total = Vec18::Zero();    // fixed-gain gradient (sum over all steps)
};

/// Single backward pass over a recorded rollout. Cost is linear in the
/// horizon and independent of the parameter dimension.
AdjointResult adjoint_sweep(const RolloutRecord& rec,
                            const AdjointOptions& opts = {});

/// Parameter selections for the forward engines: dTheta/dp (18 x D).
Eigen::MatrixXd param_map_full();          // 18 x 18 identity
Eigen::MatrixXd param_map_theta_only();    // 18 x 12, controller gains only
/// Duplicated-gain inflation: each of the 18 gains is the mean of `copies`
/// duplicates, giving an 18 x (18*copies) map.
Eigen::MatrixXd param_map_inflated(int copies);

struct ForwardOptions {
  double debug_jacobian_perturb = 0.0;
};

/// Forward sensitivity for fixed gains: propagates S_k = d z_k / d p
/// alongside the recorded rollout. Returns the D-dim gradient.
Eigen::VectorXd forward_sens_fixed(const RolloutRecord& rec,
                                   const Eigen::MatrixXd& param_map,
                                   const ForwardOptions& opts = {});

/// Cost-to-go forward variant: a separate sensitivity propagation from each
/// update instant to the horizon end. Quadratic in the horizon.
std::vector<Vec18> forward_sens_ctg(const RolloutRecord& rec);

/// Single-pass shared-sensitivity variant: attributes the accumulated past
/// influence to the current step. This is NOT a valid cost-to-go gradient —
/// credit flows backwards in time — and is provided as the known-flawed
/// baseline. The per-window outputs sum to the correct fixed-gain gradient.
std::vector<Vec18> forward_sens_history(const RolloutRecord& rec);

// --- Timing --------------------------------------------------------------

enum class GradientEngine { kAdjoint, kForwardFixed, kForwardCtg, kForwardHistory };

std::string engine_name(GradientEngine e);

struct BenchRow {
  GradientEngine engine;
  int horizon = 0;
  double best_ms = 0.0;
};

/// Best (minimum over repetitions) wall time of each engine's sweep on a
/// standard disturbed-circle scenario. The per-step Jacobians are identical
/// inputs for every engine and are evaluated outside the timed region, so
/// the numbers isolate where the engines actually differ. `param_copies` > 1
/// inflates the parameter dimension for the dimension-independence check
/// (adjoint and forward-fixed only).
std::vector<BenchRow> benchmark_gradient_time(const std::vector<GradientEngine>& engines,
                                              const std::vector<int>& horizons,
                                              int repetitions, int param_copies = 1);

/// Least-squares slope of log(time) vs log(N).
double fit_loglog_slope(const std::vector<BenchRow>& rows, GradientEngine engine);

}  // namespace qtune

#endif  // QUADTUNE_GRADIENTS_HPP
