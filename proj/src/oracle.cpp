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

#include "quadtune/oracle.hpp"

#include <stdexcept>

namespace qtune::oracle {

FdResult fd_gradient(const LossFn& f, const Eigen::VectorXd& point, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("fd_gradient: epsilon must be positive");
  FdResult out;
  out.gradient = Eigen::VectorXd::Zero(point.size());
  for (int i = 0; i < point.size(); ++i) {
    Eigen::VectorXd hi = point, lo = point;
    hi(i) += epsilon;
    lo(i) -= epsilon;
    const double fh = f(hi);
    const double fl = f(lo);
    if (!std::isfinite(fh) || !std::isfinite(fl)) {
      out.skipped.push_back(i);
      continue;
    }
    out.gradient(i) = (fh - fl) / (2.0 * epsilon);
  }
  return out;
}

double fd_directional(const LossFn& f, const Eigen::VectorXd& point,
                      const Eigen::VectorXd& v, double epsilon) {
  return (f(point + epsilon * v) - f(point - epsilon * v)) / (2.0 * epsilon);
}

namespace {

struct ToyTrace {
  std::vector<double> x, xhat, dhat, u, pred, loss;
};

ToyTrace toy_rollout(const ToySystem& s, const ToyGains& g) {
  const int n = static_cast<int>(g.rows());
  ToyTrace tr;
  double x = s.x0, xh = s.xhat0, dh = s.dhat0;
  for (int k = 0; k < n; ++k) {
    const double theta = g(k, 0), l1 = g(k, 1), l2 = g(k, 2);
    const double u = -theta * xh;
    const double pred = s.a * xh + s.b * u + dh;
    tr.x.push_back(x);
    tr.xhat.push_back(xh);
    tr.dhat.push_back(dh);
    tr.u.push_back(u);
    tr.pred.push_back(pred);
    tr.loss.push_back((x - s.r) * (x - s.r) + s.w * (xh - x) * (xh - x) + s.q * u * u);
    const double innov = x - pred;
    const double x_next = s.a * x + s.b * u + s.d;
    xh = pred + l1 * innov;
    dh = dh + l2 * innov;
    x = x_next;
  }
  return tr;
}

}  // namespace

double toy_rollout_loss(const ToySystem& sys, const ToyGains& gains) {
  const ToyTrace tr = toy_rollout(sys, gains);
  double total = 0.0;
  for (double l : tr.loss) total += l;
  return total;
}

ToyGains toy_adjoint_gradients(const ToySystem& s, const ToyGains& g) {
  const int n = static_cast<int>(g.rows());
  const ToyTrace tr = toy_rollout(s, g);
  ToyGains out = ToyGains::Zero(n, 3);

  double lam_x = 0.0;
  Eigen::Vector2d lam_xh = Eigen::Vector2d::Zero();  // [lambda_xhat, lambda_dhat]
  for (int k = n - 1; k >= 0; --k) {
    const double theta = g(k, 0), l1 = g(k, 1), l2 = g(k, 2);
    const double x = tr.x[k], xh = tr.xhat[k], u = tr.u[k];
    const double innov = x - tr.pred[k];

    const double dl_du = 2.0 * s.q * u;
    const Eigen::Vector2d do_du((1.0 - l1) * s.b, -l2 * s.b);
    const double lam_u = dl_du + s.b * lam_x + do_du.dot(lam_xh);

    out(k, 0) = -xh * lam_u;          // (dh/dtheta)^T lambda_u
    out(k, 1) = innov * lam_xh(0);    // (do/dl1)^T lambda_{xhat,k+1}
    out(k, 2) = innov * lam_xh(1);

    Eigen::Matrix2d do_dxh;
    do_dxh << (1.0 - l1) * s.a, (1.0 - l1), -l2 * s.a, 1.0 - l2;
    const Eigen::Vector2d do_dx(l1, l2);
    const Eigen::Vector2d dl_dxh(2.0 * s.w * (xh - x), 0.0);
    const Eigen::Vector2d dh_dxh(-theta, 0.0);
    const double dl_dx = 2.0 * (x - s.r) - 2.0 * s.w * (xh - x);

    const Eigen::Vector2d lam_xh_k =
        dl_dxh + do_dxh.transpose() * lam_xh + dh_dxh * lam_u;
    const double lam_x_k = dl_dx + s.a * lam_x + do_dx.dot(lam_xh);
    lam_xh = lam_xh_k;
    lam_x = lam_x_k;
  }
  return out;
}

ToyGains toy_history_gradients(const ToySystem& s, const ToyGains& g) {
  const int n = static_cast<int>(g.rows());
  const ToyTrace tr = toy_rollout(s, g);
  ToyGains out = ToyGains::Zero(n, 3);

  Eigen::RowVector3d s_x = Eigen::RowVector3d::Zero();
  Eigen::Matrix<double, 2, 3> s_xh = Eigen::Matrix<double, 2, 3>::Zero();

  for (int k = 0; k < n; ++k) {
    const double theta = g(k, 0), l1 = g(k, 1), l2 = g(k, 2);
    const double x = tr.x[k], xh = tr.xhat[k], u = tr.u[k];
    const double innov = x - tr.pred[k];

    Eigen::RowVector3d u_sens = -theta * s_xh.row(0);
    u_sens(0) += -xh;  // direct theta dependence
    const double dl_dx = 2.0 * (x - s.r) - 2.0 * s.w * (xh - x);
    const double dl_dxh = 2.0 * s.w * (xh - x);
    out.row(k) = dl_dx * s_x + dl_dxh * s_xh.row(0) + 2.0 * s.q * u * u_sens;

    const Eigen::RowVector3d s_x_next = s.a * s_x + s.b * u_sens;
    Eigen::Matrix2d do_dxh;
    do_dxh << (1.0 - l1) * s.a, (1.0 - l1), -l2 * s.a, 1.0 - l2;
    Eigen::Matrix<double, 2, 3> s_xh_next =
        do_dxh * s_xh + Eigen::Vector2d(l1, l2) * s_x +
        Eigen::Vector2d((1.0 - l1) * s.b, -l2 * s.b) * u_sens;
    s_xh_next(0, 1) += innov;  // direct l1 dependence
    s_xh_next(1, 2) += innov;  // direct l2 dependence
    s_xh = s_xh_next;
    s_x = s_x_next;
  }
  return out;
}

ToyGains toy_bruteforce_gradients(const ToySystem& sys, const ToyGains& gains,
                                  double epsilon) {
  const int n = static_cast<int>(gains.rows());
  ToyGains out = ToyGains::Zero(n, 3);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < 3; ++j) {
      ToyGains hi = gains, lo = gains;
      hi(k, j) += epsilon;
      lo(k, j) -= epsilon;
      out(k, j) = (toy_rollout_loss(sys, hi) - toy_rollout_loss(sys, lo)) / (2.0 * epsilon);
    }
  }
  return out;
}

Eigen::Vector4d toy_one_step_hand_solution(const ToySystem& s, double theta,
                                           double l1, double l2) {
  (void)l1;
  (void)l2;
  // With zero terminal adjoints: lambda_u0 = 2 q u0 and only theta receives
  // a gradient, dL/dtheta0 = -xhat0 * lambda_u0 = 2 q theta xhat0^2.
  const double u0 = -theta * s.xhat0;
  const double lam_u0 = 2.0 * s.q * u0;
  return {lam_u0, -s.xhat0 * lam_u0, 0.0, 0.0};
}

}  // namespace qtune::oracle
