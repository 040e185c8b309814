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

#include <random>

#include "quadtune/dynamics.hpp"
#include "quadtune/oracle.hpp"
#include "quadtune/so3.hpp"

using namespace qtune;

namespace {

Eigen::Vector3d rand_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

RigidState random_state(std::mt19937_64& rng) {
  RigidState x;
  x.p = rand_vec(rng, 2.0);
  x.v = rand_vec(rng, 2.0);
  x.R = exp_so3<double>(rand_vec(rng, 1.0));
  x.Omega = rand_vec(rng, 1.0);
  return x;
}

}  // namespace

TEST_CASE("hat of zero is the zero matrix") {
  CHECK(hat<double>(Eigen::Vector3d::Zero()).isZero(0.0));
}

TEST_CASE("vee inverts hat") {
  const Eigen::Vector3d w(1.0, 2.0, 3.0);
  CHECK((vee(hat<double>(w)) - w).norm() == doctest::Approx(0.0));
}

TEST_CASE("hat encodes the cross product") {
  const Eigen::Vector3d r = hat<double>({1.0, 0.0, 0.0}) * Eigen::Vector3d(0.0, 1.0, 0.0);
  CHECK((r - Eigen::Vector3d(0.0, 0.0, 1.0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("vee rejects non-antisymmetric input") {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(vee(m), std::invalid_argument);
}

TEST_CASE("exp_so3 of zero is identity") {
  CHECK((exp_so3<double>(Eigen::Vector3d::Zero()) - Eigen::Matrix3d::Identity()).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("exp_so3 quarter turn about z") {
  const Eigen::Matrix3d R = exp_so3<double>({0.0, 0.0, M_PI / 2.0});
  Eigen::Matrix3d expected;
  expected << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  CHECK((R - expected).norm() < 1e-12);
}

TEST_CASE("exp_so3 inverse property") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d w = rand_vec(rng, 3.0);
    const Eigen::Matrix3d P = exp_so3<double>(w) * exp_so3<double>(Eigen::Vector3d(-w));
    CHECK((P - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("log_so3 inverts exp_so3 and handles small angles") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 30; ++i) {
    Eigen::Vector3d w = rand_vec(rng, 2.0);
    if (i < 5) w *= 1e-8;  // small-angle branch
    const Eigen::Vector3d back = log_so3<double>(exp_so3<double>(w));
    CHECK((back - w).norm() < 1e-9 * std::max(1.0, w.norm()));
  }
}

TEST_CASE("exp_so3 output stays orthonormal") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    CHECK(orthonormality_error(exp_so3<double>(rand_vec(rng, 5.0))) < 1e-12);
  }
}

TEST_CASE("hover equilibrium leaves the state unchanged") {
  QuadParams prm;
  RigidState x;
  x.p = {0.5, -0.3, -2.0};
  ControlInput u;
  u.f = prm.m * prm.g;
  const RigidState x1 = step_dynamics(x, u, Disturbance{}, prm);
  CHECK((x1.p - x.p).norm() < 1e-12);
  CHECK(x1.v.norm() < 1e-12);
  CHECK(x1.Omega.norm() < 1e-12);
  CHECK((x1.R - x.R).norm() < 1e-12);
}

TEST_CASE("free fall gains g*dt of downward velocity") {
  QuadParams prm;
  RigidState x;
  const RigidState x1 = step_dynamics(x, ControlInput{}, Disturbance{}, prm);
  // World z points down, so free fall increases v_z.
  CHECK(x1.v(2) == doctest::Approx(prm.g * prm.dt).epsilon(1e-12));
  CHECK(x1.v.head<2>().norm() == doctest::Approx(0.0));
}

TEST_CASE("unit lateral force integrates to 0.01 m/s over one step") {
  QuadParams prm;  // m = 1 kg, dt = 0.01 s
  RigidState x;
  ControlInput u;
  u.f = prm.m * prm.g;  // cancel gravity
  Disturbance d;
  d.d_f = {1.0, 0.0, 0.0};
  const RigidState x1 = step_dynamics(x, u, d, prm);
  CHECK(x1.v(0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(x1.v(1) == doctest::Approx(0.0));
  CHECK(x1.v(2) == doctest::Approx(0.0));
}

TEST_CASE("noiseless measurement equals the state") {
  std::mt19937_64 rng(3);
  const RigidState x = random_state(rng);
  const Measurement y = measure(x, NoiseConfig{}, rng);
  CHECK((y.p - x.p).norm() == doctest::Approx(0.0));
  CHECK((y.v - x.v).norm() == doctest::Approx(0.0));
  CHECK((y.R - x.R).norm() == doctest::Approx(0.0));
  CHECK((y.Omega - x.Omega).norm() == doctest::Approx(0.0));
}

TEST_CASE("measurement noise has the configured scale") {
  std::mt19937_64 rng(4);
  RigidState x;
  NoiseConfig cfg;
  cfg.sigma_p = 0.01;
  const int n = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = measure(x, cfg, rng).p(0);
    sum += e;
    sum2 += e * e;
  }
  const double std_emp = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(std_emp == doctest::Approx(0.01).epsilon(0.10));
}

TEST_CASE("measurement stream is deterministic in the seed") {
  RigidState x;
  NoiseConfig cfg;
  cfg.sigma_p = 0.01;
  cfg.sigma_v = 0.02;
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 50; ++i) {
    const Measurement ya = measure(x, cfg, a);
    const Measurement yb = measure(x, cfg, b);
    CHECK(ya.p == yb.p);
    CHECK(ya.v == yb.v);
  }
}

TEST_CASE("dynamics Jacobians match finite differences") {
  std::mt19937_64 rng(5);
  QuadParams prm;
  std::uniform_real_distribution<double> uf(0.0, 2.0 * prm.m * prm.g);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const RigidState x = random_state(rng);
    ControlInput u;
    u.f = uf(rng);
    u.tau = rand_vec(rng, 1.0);
    Disturbance d;
    d.d_f = rand_vec(rng, 1.0);
    d.d_tau = rand_vec(rng, 0.5);

    Mat12 A;
    Eigen::Matrix<double, 12, 4> B;
    dynamics_jacobians(x, u, d, prm, A, B);

    const double eps = 1e-6;
    for (int j = 0; j < 12; ++j) {
      Vec12 dv = Vec12::Zero();
      dv(j) = eps;
      const RigidState hi = apply_state_tangent<double>(x, dv);
      dv(j) = -eps;
      const RigidState lo = apply_state_tangent<double>(x, dv);
      const Vec12 col = (state_tangent_from<double>(step_dynamics(x, u, d, prm),
                                                    step_dynamics(hi, u, d, prm)) -
                         state_tangent_from<double>(step_dynamics(x, u, d, prm),
                                                    step_dynamics(lo, u, d, prm))) /
                        (2.0 * eps);
      worst = std::max(worst, (col - A.col(j)).norm() / std::max(1.0, A.col(j).norm()));
    }
    for (int j = 0; j < 4; ++j) {
      ControlInput hi = u, lo = u;
      if (j == 0) {
        hi.f += eps;
        lo.f -= eps;
      } else {
        hi.tau(j - 1) += eps;
        lo.tau(j - 1) -= eps;
      }
      const RigidState base = step_dynamics(x, u, d, prm);
      const Vec12 col = (state_tangent_from<double>(base, step_dynamics(x, hi, d, prm)) -
                         state_tangent_from<double>(base, step_dynamics(x, lo, d, prm))) /
                        (2.0 * eps);
      worst = std::max(worst, (col - B.col(j)).norm() / std::max(1.0, B.col(j).norm()));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("thrust column at hover is the analytic partial") {
  QuadParams prm;
  RigidState x;  // R = I
  ControlInput u;
  u.f = prm.m * prm.g;
  Mat12 A;
  Eigen::Matrix<double, 12, 4> B;
  dynamics_jacobians(x, u, Disturbance{}, prm, A, B);
  // dv'/df = -dt/m on the world z row; dp'/df follows semi-implicitly.
  CHECK(B(5, 0) == doctest::Approx(-prm.dt / prm.m).epsilon(1e-12));
  CHECK(B(2, 0) == doctest::Approx(-prm.dt * prm.dt / prm.m).epsilon(1e-12));
  CHECK(B(3, 0) == doctest::Approx(0.0));
  CHECK(B(4, 0) == doctest::Approx(0.0));
}

TEST_CASE("additive force disturbance drops out of the Jacobians") {
  std::mt19937_64 rng(6);
  QuadParams prm;
  const RigidState x = random_state(rng);
  ControlInput u;
  u.f = 9.0;
  u.tau = {0.1, -0.2, 0.05};
  Mat12 A0, A1;
  Eigen::Matrix<double, 12, 4> B0, B1;
  dynamics_jacobians(x, u, Disturbance{}, prm, A0, B0);
  Disturbance d;
  d.d_f = {1.5, -0.7, 0.3};
  dynamics_jacobians(x, u, d, prm, A1, B1);
  CHECK((A0 - A1).norm() == doctest::Approx(0.0));
  CHECK((B0 - B1).norm() == doctest::Approx(0.0));
}

TEST_CASE("torque disturbance only shifts the exact attitude update") {
  // In continuous time the additive disturbance never appears in the
  // Jacobians. The discrete map uses R' = R exp(Omega' dt) with Omega'
  // evaluated after the torque update, so d_tau moves the linearization
  // point of the attitude rows; every other row stays untouched.
  std::mt19937_64 rng(7);
  QuadParams prm;
  const RigidState x = random_state(rng);
  ControlInput u;
  u.f = 9.0;
  u.tau = {0.1, -0.2, 0.05};
  Mat12 A0, A1;
  Eigen::Matrix<double, 12, 4> B0, B1;
  dynamics_jacobians(x, u, Disturbance{}, prm, A0, B0);
  Disturbance d;
  d.d_tau = {0.2, 0.1, -0.4};
  dynamics_jacobians(x, u, d, prm, A1, B1);
  Mat12 diff = A0 - A1;
  diff.middleRows<3>(6).setZero();
  CHECK(diff.norm() == doctest::Approx(0.0));
  Eigen::Matrix<double, 12, 4> diffB = B0 - B1;
  diffB.middleRows<3>(6).setZero();
  CHECK(diffB.norm() == doctest::Approx(0.0));
}
