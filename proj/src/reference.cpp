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

#include "quadtune/reference.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qtune {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Row of d-th derivative basis values t^j * j!/(j-d)! for C coefficients.
Eigen::RowVectorXd basis_row(int coeff_count, int deriv, double t) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(coeff_count);
  for (int j = deriv; j < coeff_count; ++j) {
    double c = 1.0;
    for (int k = 0; k < deriv; ++k) c *= static_cast<double>(j - k);
    row(j) = c * std::pow(t, j - deriv);
  }
  return row;
}

// Gram matrix of the squared q-th derivative over [0, T].
Eigen::MatrixXd deriv_gram(int coeff_count, int q, double T) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(coeff_count, coeff_count);
  for (int i = q; i < coeff_count; ++i) {
    for (int j = q; j < coeff_count; ++j) {
      double ci = 1.0, cj = 1.0;
      for (int k = 0; k < q; ++k) {
        ci *= static_cast<double>(i - k);
        cj *= static_cast<double>(j - k);
      }
      const int pw = i + j - 2 * q + 1;
      Q(i, j) = ci * cj * std::pow(T, pw) / pw;
    }
  }
  return Q;
}

// Equality-constrained least-curvature fit for one axis: minimize the
// integral of the squared q-th derivative subject to waypoint interpolation,
// zero boundary derivatives 1..n_boundary and continuity of derivatives
// 1..n_cont at interior knots. Returns per-segment coefficients.
std::vector<Eigen::VectorXd> solve_axis(const std::vector<double>& values,
                                        const std::vector<double>& durations,
                                        int coeff_count, int q, int n_boundary,
                                        int n_cont) {
  const int n = static_cast<int>(durations.size());
  const int nvar = n * coeff_count;
  const int ncon = 2 * n + 2 * n_boundary + n_cont * (n - 1);

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(nvar, nvar);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ncon, nvar);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ncon);

  for (int i = 0; i < n; ++i) {
    Q.block(i * coeff_count, i * coeff_count, coeff_count, coeff_count) =
        deriv_gram(coeff_count, q, durations[i]);
  }

  int row = 0;
  for (int i = 0; i < n; ++i) {
    A.block(row, i * coeff_count, 1, coeff_count) = basis_row(coeff_count, 0, 0.0);
    b(row++) = values[i];
    A.block(row, i * coeff_count, 1, coeff_count) =
        basis_row(coeff_count, 0, durations[i]);
    b(row++) = values[i + 1];
  }
  for (int d = 1; d <= n_boundary; ++d) {
    A.block(row++, 0, 1, coeff_count) = basis_row(coeff_count, d, 0.0);
    A.block(row++, (n - 1) * coeff_count, 1, coeff_count) =
        basis_row(coeff_count, d, durations[n - 1]);
  }
  for (int i = 1; i < n; ++i) {
    for (int d = 1; d <= n_cont; ++d) {
      A.block(row, (i - 1) * coeff_count, 1, coeff_count) =
          basis_row(coeff_count, d, durations[i - 1]);
      A.block(row, i * coeff_count, 1, coeff_count) =
          -basis_row(coeff_count, d, 0.0);
      ++row;
    }
  }

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nvar + ncon, nvar + ncon);
  kkt.topLeftCorner(nvar, nvar) = 2.0 * Q;
  kkt.block(0, nvar, nvar, ncon) = A.transpose();
  kkt.block(nvar, 0, ncon, nvar) = A;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nvar + ncon);
  rhs.tail(ncon) = b;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("solve_min_snap: singular interpolation system");
  }
  const Eigen::VectorXd sol = lu.solve(rhs);

  std::vector<Eigen::VectorXd> coeffs(n);
  for (int i = 0; i < n; ++i) coeffs[i] = sol.segment(i * coeff_count, coeff_count);
  return coeffs;
}

double eval_poly_deriv(const Eigen::Matrix<double, 8, 1>& c, int deriv, double t) {
  // Horner on the differentiated coefficients.
  double acc = 0.0;
  for (int j = 7; j >= deriv; --j) {
    double f = 1.0;
    for (int k = 0; k < deriv; ++k) f *= static_cast<double>(j - k);
    acc = acc * t + c(j) * f;
  }
  return acc;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  const double nn = v.norm();
  return nn > 1e-12 ? Eigen::Vector3d(v / nn) : Eigen::Vector3d::UnitX();
}

}  // namespace

std::vector<PolySegment> solve_min_snap(const std::vector<Waypoint>& waypoints) {
  const int n = static_cast<int>(waypoints.size()) - 1;
  if (n < 1) throw std::invalid_argument("solve_min_snap: need at least two waypoints");
  std::vector<double> durations(n);
  for (int i = 0; i < n; ++i) {
    durations[i] = waypoints[i + 1].t - waypoints[i].t;
    if (durations[i] <= 0.0) {
      throw std::invalid_argument("solve_min_snap: waypoint times must be strictly increasing");
    }
  }

  std::vector<PolySegment> segments(n);
  for (int i = 0; i < n; ++i) segments[i].duration = durations[i];

  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> vals(n + 1);
    for (int i = 0; i <= n; ++i) vals[i] = waypoints[i].pos(axis);
    const auto c = solve_axis(vals, durations, 8, 4, 3, 4);
    for (int i = 0; i < n; ++i) segments[i].coeffs.col(axis) = c[i];
  }
  {
    std::vector<double> vals(n + 1);
    for (int i = 0; i <= n; ++i) vals[i] = waypoints[i].yaw;
    const auto c = solve_axis(vals, durations, 5, 2, 1, 2);
    for (int i = 0; i < n; ++i) segments[i].coeffs.col(3).head<5>() = c[i];
  }
  return segments;
}

RefPoint eval_ref(const Task& task, double t) {
  RefPoint out;
  if (task.segments.empty()) return out;

  const double total = task.total_duration();
  if (t <= 0.0 || t >= total) {
    const bool at_end = t >= total;
    const auto& seg = at_end ? task.segments.back() : task.segments.front();
    const double tl = at_end ? seg.duration : 0.0;
    for (int a = 0; a < 3; ++a) out.p_d(a) = eval_poly_deriv(seg.coeffs.col(a), 0, tl);
    out.yaw_d = eval_poly_deriv(seg.coeffs.col(3), 0, tl);
    return out;  // clamped: derivatives stay zero
  }

  double t_local = t;
  std::size_t idx = 0;
  while (idx + 1 < task.segments.size() && t_local > task.segments[idx].duration) {
    t_local -= task.segments[idx].duration;
    ++idx;
  }
  const auto& seg = task.segments[idx];
  for (int a = 0; a < 3; ++a) {
    out.p_d(a) = eval_poly_deriv(seg.coeffs.col(a), 0, t_local);
    out.v_d(a) = eval_poly_deriv(seg.coeffs.col(a), 1, t_local);
    out.a_d(a) = eval_poly_deriv(seg.coeffs.col(a), 2, t_local);
    out.jerk_d(a) = eval_poly_deriv(seg.coeffs.col(a), 3, t_local);
  }
  out.yaw_d = eval_poly_deriv(seg.coeffs.col(3), 0, t_local);
  out.yaw_rate_d = eval_poly_deriv(seg.coeffs.col(3), 1, t_local);
  return out;
}

Disturbance eval_wind(const Task& task, double t) {
  Disturbance d;
  const auto& w = task.wind;
  for (int i = 0; i < 3; ++i) {
    d.d_f(i) = w.force_const(i) +
               w.force_amp(i) * std::sin(2.0 * kPi * w.force_freq(i) * t + w.force_phase(i));
  }
  d.d_tau = w.torque_const;
  return d;
}

std::vector<Task> sample_tasks(std::uint64_t seed, int count, const DifficultyConfig& cfg) {
  if (count < 1) throw std::invalid_argument("sample_tasks: count must be >= 1");
  std::vector<Task> tasks;
  tasks.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::seed_seq sseq{static_cast<std::uint64_t>(seed),
                       static_cast<std::uint64_t>(i) + 1};
    std::mt19937_64 rng(sseq);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Task task;
    task.seed = seed;
    task.name = "sampled_" + std::to_string(i);

    std::vector<Waypoint> wps;
    Waypoint w0;
    for (int a = 0; a < 3; ++a) {
      w0.pos(a) = cfg.box_center(a) + (2.0 * uni(rng) - 1.0) * cfg.box_half(a);
    }
    wps.push_back(w0);
    double t = 0.0;
    while (static_cast<int>(wps.size()) < cfg.waypoint_count || t < cfg.min_duration) {
      t += cfg.segment_time_min + uni(rng) * (cfg.segment_time_max - cfg.segment_time_min);
      Waypoint w;
      for (int a = 0; a < 3; ++a) {
        w.pos(a) = cfg.box_center(a) + (2.0 * uni(rng) - 1.0) * cfg.box_half(a);
      }
      w.t = t;
      wps.push_back(w);
    }
    task.segments = solve_min_snap(wps);

    for (int a = 0; a < 3; ++a) {
      task.wind.force_const(a) = (2.0 * uni(rng) - 1.0) * cfg.force_const_max;
      task.wind.force_amp(a) = uni(rng) * cfg.force_amp_max;
      task.wind.force_freq(a) = uni(rng) * cfg.force_freq_max;
      task.wind.force_phase(a) = uni(rng) * 2.0 * kPi;
    }
    const double tq = uni(rng) * cfg.torque_max;
    task.wind.torque_const = tq * random_unit(rng);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

Task make_preset(const std::string& category, double speed, double wind_level,
                 std::uint64_t seed, double duration) {
  std::seed_seq sseq{seed, static_cast<std::uint64_t>(0x9e3779b9)};
  std::mt19937_64 rng(sseq);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const double radius = 2.0;
  const double z0 = -2.0;
  std::vector<Waypoint> wps;

  if (category == "hover") {
    for (double t = 0.0; t <= duration + 1e-9; t += duration / 2.0) {
      Waypoint w;
      w.pos = {0.0, 0.0, z0};
      w.t = t;
      wps.push_back(w);
    }
  } else if (category == "2d_circle" || category == "3d_circle") {
    const double period = 2.0 * kPi * radius / speed;
    const double step = period / 8.0;
    const int count = static_cast<int>(std::ceil(duration / step));
    for (int i = 0; i <= count; ++i) {
      const double t = i * step;
      const double th = 2.0 * kPi * t / period;
      Waypoint w;
      w.pos = {radius * std::cos(th), radius * std::sin(th), z0};
      if (category == "3d_circle") w.pos(2) = z0 + 0.5 * std::sin(th);
      w.t = t;
      wps.push_back(w);
    }
  } else if (category == "figure8") {
    const double amp = 2.0;
    const double w_ang = speed / amp;
    const double period = 2.0 * kPi / w_ang;
    const double step = period / 12.0;
    const int count = static_cast<int>(std::ceil(duration / step));
    for (int i = 0; i <= count; ++i) {
      const double t = i * step;
      const double u = w_ang * t;
      Waypoint w;
      w.pos = {amp * std::sin(u), 0.5 * amp * std::sin(2.0 * u), z0};
      w.t = t;
      wps.push_back(w);
    }
  } else {
    throw std::invalid_argument("make_preset: unknown category '" + category + "'");
  }

  Task task;
  task.seed = seed;
  task.name = category;
  task.segments = solve_min_snap(wps);
  if (wind_level > 0.0) {
    Eigen::Vector3d dir = random_unit(rng);
    dir(2) *= 0.3;  // predominantly lateral wind
    dir.normalize();
    task.wind.force_const = wind_level * dir;
    task.wind.force_amp = Eigen::Vector3d::Constant(0.5 * wind_level);
    task.wind.force_freq = {0.2 + 0.3 * uni(rng), 0.2 + 0.3 * uni(rng), 0.2 + 0.3 * uni(rng)};
    task.wind.force_phase = {2.0 * kPi * uni(rng), 2.0 * kPi * uni(rng), 2.0 * kPi * uni(rng)};
    task.wind.torque_const = wind_level * random_unit(rng);
  }
  return task;
}

}  // namespace qtune
