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

#ifndef QUADTUNE_POLICY_HPP
#define QUADTUNE_POLICY_HPP

#include <cstdint>
#include <string>

#include "quadtune/controller.hpp"
#include "quadtune/reference.hpp"

namespace qtune {

inline constexpr int kFeatureDim = 68;
inline constexpr int kHiddenDim = 128;

using FeatureVec = Eigen::Matrix<double, kFeatureDim, 1>;

/// Normalization constants applied before the network input.
struct FeatureScales {
  double pos = 5.0;       // [m]
  double vel = 5.0;       // [m/s]
  double acc = 5.0;       // [m/s^2]
  double rate = 10.0;     // [rad/s]
  double dist_f = 2.0;    // [N]
  double dist_tau = 2.0;  // [N m]
};

/**
 * Feature vector consumed by the meta-policy at a gain-update instant:
 *   [ 0,24)  observer estimate: p/s, v/s, R (flattened), Omega/s, dhat_f/s,
 *            dhat_tau/s
 *   [24,34)  reference: p_d/s, v_d/s, a_d/s, yaw_d/pi
 *   [34,66)  active segment coefficients, normalized by their max magnitude
 *   [66,68)  phase within the segment and within the whole trajectory
 *
 * Templated on the scalar so the estimate block can carry derivative
 * information; everything else is constant in xhat.
 */
template <class S>
Eigen::Matrix<S, kFeatureDim, 1> build_features(const ObserverStateT<S>& xhat,
                                                const Task& task, double t,
                                                const FeatureScales& sc = {});

FeatureVec build_features(const ObserverState& xhat, const Task& task, double t,
                          const FeatureScales& sc = {});

/// d(features)/d(xhat tangent), 68 x 18.
Eigen::Matrix<double, kFeatureDim, 18> dfeat_dxhat(const ObserverState& xhat,
                                                   const Task& task, double t,
                                                   const FeatureScales& sc = {});

/// Two-layer perceptron 68 -> 128 (ReLU) -> 18 plus Adam moments.
struct PolicyParams {
  Eigen::MatrixXd W1;  // 128 x 68
  Eigen::VectorXd b1;  // 128
  Eigen::MatrixXd W2;  // 18 x 128
  Eigen::VectorXd b2;  // 18

  Eigen::MatrixXd m_W1, v_W1, m_W2, v_W2;
  Eigen::VectorXd m_b1, v_b1, m_b2, v_b2;
  std::int64_t step_count = 0;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero b1, and b2 set
  /// so the initial output reproduces `warm_start` inside `bounds`.
  static PolicyParams init(std::uint64_t seed, const Vec18& warm_start,
                           const GainBounds& bounds);

  bool same_shape(const PolicyParams& other) const;
};

struct PolicyCache {
  FeatureVec feat = FeatureVec::Zero();
  Eigen::VectorXd z1;  // pre-activation, 128
  Eigen::VectorXd a1;  // ReLU output, 128
};

/// Raw network output eta (18). Fills `cache` for the backward pass.
Vec18 policy_forward(const PolicyParams& p, const FeatureVec& feat,
                     PolicyCache* cache = nullptr);

/// Theta = lo + (hi - lo) * sigmoid(eta), element-wise.
Vec18 bound_gains(const Vec18& eta, const GainBounds& bounds);

/// Diagonal of dTheta/deta.
Vec18 bound_gains_jacobian(const Vec18& eta, const GainBounds& bounds);

struct PolicyGrads {
  Eigen::MatrixXd W1, W2;
  Eigen::VectorXd b1, b2;

  static PolicyGrads zero();
  PolicyGrads& operator+=(const PolicyGrads& o);
  PolicyGrads& operator*=(double s);
  double norm() const;
};

/// Accumulates d(loss)/d(weights) for upstream d(loss)/d(eta) into `acc`, and
/// returns d(loss)/d(features).
FeatureVec policy_backward(const PolicyParams& p, const PolicyCache& cache,
                           const Vec18& deta, PolicyGrads& acc);

/// dTheta/dxhat (18 x 18) at an update instant: the bound map, the network,
/// and the feature extraction chained together.
Eigen::Matrix<double, 18, 18> policy_state_feedback(const PolicyParams& p,
                                                    const PolicyCache& cache,
                                                    const Vec18& eta,
                                                    const GainBounds& bounds,
                                                    const ObserverState& xhat,
                                                    const Task& task, double t,
                                                    const FeatureScales& sc = {});

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update; increments step_count.
void adam_step(PolicyParams& p, const PolicyGrads& g, const AdamConfig& cfg);

/// JSON checkpoint with exact (round-trip safe) weights and Adam state.
void save_checkpoint(const PolicyParams& p, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace qtune

#endif  // QUADTUNE_POLICY_HPP
