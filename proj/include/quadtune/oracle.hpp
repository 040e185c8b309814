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

#ifndef QUADTUNE_ORACLE_HPP
#define QUADTUNE_ORACLE_HPP

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qtune::oracle {

/// Brute-force verification standard. Everything here is independent of the
/// analytic Jacobian providers and gradient engines; it only ever evaluates
/// loss functionals as black boxes.

using LossFn = std::function<double(const Eigen::VectorXd&)>;

struct FdResult {
  Eigen::VectorXd gradient;
  std::vector<int> skipped;  // coordinates with non-finite probes
};

/// Central finite differences, coordinate by coordinate.
FdResult fd_gradient(const LossFn& f, const Eigen::VectorXd& point, double epsilon);

/// Central directional derivative along v.
double fd_directional(const LossFn& f, const Eigen::VectorXd& point,
                      const Eigen::VectorXd& v, double epsilon);

/// Relative error metric used by every gradient check.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// --- Scalar toy closed loop ----------------------------------------------
//
// 1-D linear plant with a disturbance-augmented observer and a proportional
// controller, small enough that every gradient can be enumerated by brute
// force. The closed-form derivation lives in docs/toy_adjoint_derivation.md.
//
//   u_k      = -theta_k * xhat_k
//   x_{k+1}  = a x_k + b u_k + d
//   y_k      = x_k
//   pred_k   = a xhat_k + b u_k + dhat_k
//   xhat_{k+1} = pred_k + l1_k (y_k - pred_k)
//   dhat_{k+1} = dhat_k + l2_k (y_k - pred_k)
//   loss_k   = (x_k - r)^2 + w (xhat_k - x_k)^2 + q u_k^2

struct ToySystem {
  double a = 1.1;
  double b = 0.8;
  double d = 0.3;        // constant disturbance
  double r = 1.0;        // constant reference
  double w = 0.5;        // estimation-error weight
  double q = 0.01;       // control-effort weight
  double x0 = 0.2;
  double xhat0 = 0.0;
  double dhat0 = 0.0;
};

/// Per-step parameters: columns [theta, l1, l2], one row per step.
using ToyGains = Eigen::MatrixXd;

double toy_rollout_loss(const ToySystem& sys, const ToyGains& gains);

/// Scalar instance of the backward costate recursions; per-step gradients
/// w.r.t. [theta_k, l1_k, l2_k].
ToyGains toy_adjoint_gradients(const ToySystem& sys, const ToyGains& gains);

/// Scalar instance of the single-pass shared-sensitivity attribution rule.
ToyGains toy_history_gradients(const ToySystem& sys, const ToyGains& gains);

/// Exhaustive per-step perturbation of each parameter, the trusted answer.
ToyGains toy_bruteforce_gradients(const ToySystem& sys, const ToyGains& gains,
                                  double epsilon = 1e-7);

/// Closed-form adjoint values for the one-step problem (hand derivation in
/// the docs): returns {lambda_u0, dL/dtheta0, dL/dl1_0, dL/dl2_0}.
Eigen::Vector4d toy_one_step_hand_solution(const ToySystem& sys, double theta,
                                           double l1, double l2);

}  // namespace qtune::oracle

#endif  // QUADTUNE_ORACLE_HPP
