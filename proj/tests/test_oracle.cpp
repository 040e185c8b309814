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

#include "quadtune/oracle.hpp"

using namespace qtune;
using namespace qtune::oracle;

TEST_CASE("finite differences on a quadratic bowl") {
  const LossFn f = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const FdResult r = fd_gradient(f, x, 1e-6);
  CHECK(r.skipped.empty());
  CHECK(std::abs(r.gradient(0) - 2.0) < 1e-8);
  CHECK(std::abs(r.gradient(1) - 4.0) < 1e-8);
}

TEST_CASE("step sizes in the trust plateau agree with each other") {
  // Mildly nonlinear scalar functional; the standard protocol: sweep epsilon
  // and accept the region where successive estimates agree.
  const LossFn f = [](const Eigen::VectorXd& v) {
    return std::sin(v(0)) * v(0) * v(0) + std::exp(0.3 * v(0));
  };
  Eigen::VectorXd x(1);
  x << 0.8;
  std::vector<double> estimates;
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    estimates.push_back(fd_gradient(f, x, eps).gradient(0));
  }
  CHECK(relative_error(estimates[0], estimates[1]) < 1e-6);
  CHECK(relative_error(estimates[1], estimates[2]) < 1e-6);
}

TEST_CASE("non-finite probes are reported, not propagated") {
  const LossFn f = [](const Eigen::VectorXd& v) {
    return v(0) > 0.5 ? std::numeric_limits<double>::quiet_NaN() : v.squaredNorm();
  };
  Eigen::VectorXd x(2);
  x << 0.5, 1.0;
  const FdResult r = fd_gradient(f, x, 1e-3);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0] == 0);
  CHECK(std::isfinite(r.gradient(1)));
}

TEST_CASE("directional derivative is consistent with the full gradient") {
  const LossFn f = [](const Eigen::VectorXd& v) { return v.squaredNorm() + v(0) * v(1); };
  Eigen::VectorXd x(2), dir(2);
  x << 0.3, -0.7;
  dir << 1.0, 2.0;
  const double d = fd_directional(f, x, dir, 1e-6);
  const FdResult g = fd_gradient(f, x, 1e-6);
  CHECK(std::abs(d - g.gradient.dot(dir)) < 1e-7);
}

// --- Toy closed loop ------------------------------------------------------

namespace {
ToyGains default_gains(int steps) {
  ToyGains g(steps, 3);
  for (int k = 0; k < steps; ++k) {
    g(k, 0) = 0.7 + 0.05 * k;  // theta
    g(k, 1) = 0.4 - 0.02 * k;  // l1
    g(k, 2) = 0.2 + 0.01 * k;  // l2
  }
  return g;
}
}  // namespace

TEST_CASE("one step adjoint matches the hand derivation") {
  ToySystem sys;
  sys.xhat0 = 0.6;  // nonzero so theta receives gradient
  const double theta = 0.9, l1 = 0.3, l2 = 0.1;
  ToyGains g(1, 3);
  g << theta, l1, l2;
  const ToyGains adj = toy_adjoint_gradients(sys, g);
  const Eigen::Vector4d hand = toy_one_step_hand_solution(sys, theta, l1, l2);
  CHECK(adj(0, 0) == doctest::Approx(hand(1)).epsilon(1e-14));
  CHECK(adj(0, 1) == doctest::Approx(hand(2)).epsilon(1e-14));
  CHECK(adj(0, 2) == doctest::Approx(hand(3)).epsilon(1e-14));
  // And the brute force agrees with both.
  const ToyGains bf = toy_bruteforce_gradients(sys, g);
  CHECK(relative_error(Eigen::VectorXd(adj.reshaped()), Eigen::VectorXd(bf.reshaped())) < 1e-6);
}

TEST_CASE("zero observer gain decouples the plant costate from the estimator") {
  // With l1 = l2 = 0 the cross term (do/dx)^T lambda_xhat vanishes, so the
  // plant costate runs independently of the estimator costate. The recursion
  // must still reproduce brute force exactly in this regime.
  ToySystem sys;
  ToyGains g = default_gains(4);
  g.col(1).setZero();
  g.col(2).setZero();
  const ToyGains adj = toy_adjoint_gradients(sys, g);
  const ToyGains bf = toy_bruteforce_gradients(sys, g);
  CHECK(relative_error(Eigen::VectorXd(adj.reshaped()), Eigen::VectorXd(bf.reshaped())) < 1e-6);
}

TEST_CASE("per step adjoint matches exhaustive perturbation on three steps") {
  ToySystem sys;
  const ToyGains g = default_gains(3);
  const ToyGains adj = toy_adjoint_gradients(sys, g);
  const ToyGains bf = toy_bruteforce_gradients(sys, g);
  CHECK(relative_error(Eigen::VectorXd(adj.reshaped()), Eigen::VectorXd(bf.reshaped())) < 1e-6);
}

TEST_CASE("longer horizons still match brute force") {
  ToySystem sys;
  const ToyGains g = default_gains(12);
  const ToyGains adj = toy_adjoint_gradients(sys, g);
  const ToyGains bf = toy_bruteforce_gradients(sys, g);
  CHECK(relative_error(Eigen::VectorXd(adj.reshaped()), Eigen::VectorXd(bf.reshaped())) < 1e-5);
}

TEST_CASE("history attribution is wrong per step but right in total") {
  ToySystem sys;
  const ToyGains g = default_gains(2);
  const ToyGains hist = toy_history_gradients(sys, g);
  const ToyGains bf = toy_bruteforce_gradients(sys, g);
  // The single-pass rule assigns credit for past influence to the current
  // step; on a 2-step system the step-0 row already differs.
  CHECK((hist - bf).cwiseAbs().maxCoeff() > 1e-4);
  // Tied parameters: summing rows recovers the correct fixed-gain gradient.
  ToyGains tied = g;
  tied.row(1) = tied.row(0);
  const ToyGains hist_t = toy_history_gradients(sys, tied);
  const Eigen::Vector3d total = hist_t.colwise().sum();
  Eigen::Vector3d fd;
  const double eps = 1e-7;
  for (int j = 0; j < 3; ++j) {
    ToyGains hi = tied, lo = tied;
    hi.col(j).array() += eps;
    lo.col(j).array() -= eps;
    fd(j) = (toy_rollout_loss(sys, hi) - toy_rollout_loss(sys, lo)) / (2.0 * eps);
  }
  CHECK((total - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
}
