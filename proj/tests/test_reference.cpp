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

#include <cmath>

#include "quadtune/reference.hpp"

using namespace qtune;

namespace {

Task task_from_segments(std::vector<PolySegment> segs) {
  Task t;
  t.segments = std::move(segs);
  return t;
}

// Discrete snap cost: squared 4th-order central difference of sampled
// positions, summed over the whole trajectory. Used to compare candidate
// interpolants under one common functional.
double discrete_snap_cost(const Task& task, double dt) {
  const double T = task.total_duration();
  double cost = 0.0;
  for (double t = 2.0 * dt; t + 2.0 * dt <= T; t += dt) {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    const double c[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
    for (int j = -2; j <= 2; ++j) {
      s += c[j + 2] * eval_ref(task, t + j * dt).p_d;
    }
    s /= dt * dt * dt * dt;
    cost += s.squaredNorm() * dt;
  }
  return cost;
}

// Hermite cubic through the waypoints with zero velocity at every knot; a
// feasible but jerk-discontinuous comparison interpolant.
std::vector<PolySegment> zero_velocity_cubic(const std::vector<Waypoint>& wps) {
  std::vector<PolySegment> segs;
  for (size_t i = 0; i + 1 < wps.size(); ++i) {
    PolySegment s;
    s.duration = wps[i + 1].t - wps[i].t;
    const double T = s.duration;
    for (int ax = 0; ax < 3; ++ax) {
      const double p0 = wps[i].pos(ax), p1 = wps[i + 1].pos(ax);
      s.coeffs(0, ax) = p0;
      s.coeffs(2, ax) = 3.0 * (p1 - p0) / (T * T);
      s.coeffs(3, ax) = -2.0 * (p1 - p0) / (T * T * T);
    }
    s.coeffs(0, 3) = wps[i].yaw;
    segs.push_back(s);
  }
  return segs;
}

std::vector<Waypoint> line_waypoints() {
  return {{{0.0, 0.0, 0.0}, 0.0, 0.0}, {{2.0, 0.0, 0.0}, 0.0, 2.0}};
}

}  // namespace

TEST_CASE("straight line solution is symmetric about the midpoint") {
  const Task t = task_from_segments(solve_min_snap(line_waypoints()));
  const RefPoint mid = eval_ref(t, 1.0);
  CHECK(mid.p_d(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(mid.p_d(1)) < 1e-10);
  CHECK(std::abs(mid.p_d(2)) < 1e-10);
}

TEST_CASE("coincident endpoints give a constant polynomial") {
  std::vector<Waypoint> wps = {{{1.0, -1.0, 0.5}, 0.3, 0.0}, {{1.0, -1.0, 0.5}, 0.3, 3.0}};
  const auto segs = solve_min_snap(wps);
  REQUIRE(segs.size() == 1);
  for (int ax = 0; ax < 4; ++ax) {
    for (int k = 1; k < 8; ++k) {
      CHECK(std::abs(segs[0].coeffs(k, ax)) < 1e-10);
    }
  }
}

TEST_CASE("snap cost beats a zero-velocity cubic interpolant on a square") {
  std::vector<Waypoint> wps = {{{0.0, 0.0, 0.0}, 0.0, 0.0},
                               {{2.0, 0.0, 0.0}, 0.0, 2.5},
                               {{2.0, 2.0, 0.0}, 0.0, 5.0},
                               {{0.0, 2.0, 0.0}, 0.0, 7.5}};
  const Task min_snap = task_from_segments(solve_min_snap(wps));
  const Task cubic = task_from_segments(zero_velocity_cubic(wps));
  const double dt = 1e-3;
  CHECK(discrete_snap_cost(min_snap, dt) <= discrete_snap_cost(cubic, dt));
}

TEST_CASE("solver rejects bad input") {
  CHECK_THROWS_AS(solve_min_snap({{{0.0, 0.0, 0.0}, 0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(solve_min_snap({{{0.0, 0.0, 0.0}, 0.0, 1.0}, {{1.0, 0.0, 0.0}, 0.0, 1.0}}),
                  std::invalid_argument);
}

TEST_CASE("interpolation constraints hold exactly at knots") {
  std::vector<Waypoint> wps = {{{0.0, 0.0, -1.0}, 0.0, 0.0},
                               {{1.0, 2.0, -2.0}, 0.5, 3.0},
                               {{-1.0, 1.0, -1.5}, 1.0, 6.0}};
  const Task t = task_from_segments(solve_min_snap(wps));
  CHECK((eval_ref(t, 0.0).p_d - wps[0].pos).norm() < 1e-8);
  CHECK((eval_ref(t, 3.0).p_d - wps[1].pos).norm() < 1e-7);
  CHECK((eval_ref(t, 6.0).p_d - wps[2].pos).norm() < 1e-7);
}

TEST_CASE("reported derivatives are consistent with the position signal") {
  std::vector<Waypoint> wps = {{{0.0, 0.0, -1.0}, 0.0, 0.0},
                               {{2.0, 1.0, -2.0}, 0.4, 3.0},
                               {{0.0, 2.0, -1.0}, 0.9, 6.0}};
  const Task task = task_from_segments(solve_min_snap(wps));
  const double h = 1e-5;
  for (double t : {0.7, 2.1, 4.4, 5.6}) {
    const RefPoint r = eval_ref(task, t);
    const Eigen::Vector3d v_fd =
        (eval_ref(task, t + h).p_d - eval_ref(task, t - h).p_d) / (2.0 * h);
    CHECK((v_fd - r.v_d).norm() < 1e-4 * std::max(1.0, r.v_d.norm()));
    const double yaw_fd = (eval_ref(task, t + h).yaw_d - eval_ref(task, t - h).yaw_d) / (2.0 * h);
    CHECK(yaw_fd == doctest::Approx(r.yaw_rate_d).epsilon(1e-4));
  }
}

TEST_CASE("evaluation clamps beyond the trajectory end") {
  const Task t = task_from_segments(solve_min_snap(line_waypoints()));
  const RefPoint r = eval_ref(t, 10.0);
  CHECK((r.p_d - Eigen::Vector3d(2.0, 0.0, 0.0)).norm() < 1e-8);
  CHECK(r.v_d.norm() == doctest::Approx(0.0));
  CHECK(r.a_d.norm() == doctest::Approx(0.0));
}

TEST_CASE("interior knots are C4 continuous") {
  std::vector<Waypoint> wps = {{{0.0, 0.0, 0.0}, 0.0, 0.0},
                               {{1.5, -1.0, -1.0}, 0.3, 2.5},
                               {{3.0, 1.0, -2.0}, 0.6, 5.5},
                               {{1.0, 2.0, -1.0}, 0.2, 8.0}};
  const auto segs = solve_min_snap(wps);
  REQUIRE(segs.size() == 3);
  for (size_t i = 0; i + 1 < segs.size(); ++i) {
    const double T = segs[i].duration;
    for (int ax = 0; ax < 3; ++ax) {
      for (int der = 0; der <= 4; ++der) {
        // Evaluate derivative `der` of segment i at its end and i+1 at 0.
        double end_val = 0.0;
        for (int k = der; k < 8; ++k) {
          double fac = 1.0;
          for (int j = 0; j < der; ++j) fac *= (k - j);
          end_val += segs[i].coeffs(k, ax) * fac * std::pow(T, k - der);
        }
        double start_val = segs[i + 1].coeffs(der, ax);
        for (int j = 0; j < der; ++j) start_val *= (der - j);
        CHECK(std::abs(end_val - start_val) < 1e-8 * std::max(1.0, std::abs(end_val)));
      }
    }
  }
}

TEST_CASE("task sampling is deterministic in the seed") {
  DifficultyConfig cfg;
  const auto a = sample_tasks(42, 5, cfg);
  const auto b = sample_tasks(42, 5, cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].segments.size() == b[i].segments.size());
    for (size_t s = 0; s < a[i].segments.size(); ++s) {
      CHECK(a[i].segments[s].coeffs == b[i].segments[s].coeffs);
      CHECK(a[i].segments[s].duration == b[i].segments[s].duration);
    }
    CHECK(a[i].wind.force_const == b[i].wind.force_const);
    CHECK(a[i].wind.torque_const == b[i].wind.torque_const);
  }
}

TEST_CASE("zero difficulty produces zero wind") {
  DifficultyConfig cfg;
  cfg.force_const_max = 0.0;
  cfg.force_amp_max = 0.0;
  cfg.torque_max = 0.0;
  for (const Task& t : sample_tasks(7, 10, cfg)) {
    for (double s : {0.0, 1.0, 3.7, 9.2}) {
      const Disturbance d = eval_wind(t, s);
      CHECK(d.d_f.norm() == doctest::Approx(0.0));
      CHECK(d.d_tau.norm() == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("sampled wind magnitudes respect the configured ranges") {
  DifficultyConfig cfg;
  const auto tasks = sample_tasks(123, 1000, cfg);
  for (const Task& t : tasks) {
    CHECK((t.wind.force_const.cwiseAbs().array() <= cfg.force_const_max + 1e-12).all());
    CHECK((t.wind.force_amp.cwiseAbs().array() <= cfg.force_amp_max + 1e-12).all());
    CHECK(t.wind.torque_const.norm() <= cfg.torque_max + 1e-12);
    CHECK(t.total_duration() >= cfg.min_duration - 1e-9);
  }
}

TEST_CASE("presets produce finite references over their duration") {
  for (const char* name : {"hover", "2d_circle", "3d_circle", "figure8"}) {
    const Task t = make_preset(name, 2.0, 1.0, 5, 10.0);
    CHECK(t.total_duration() >= 10.0 - 1e-9);
    for (double s = 0.0; s <= 10.0; s += 0.5) {
      const RefPoint r = eval_ref(t, s);
      CHECK(r.p_d.allFinite());
      CHECK(r.v_d.allFinite());
      CHECK(r.a_d.allFinite());
    }
  }
  CHECK_THROWS_AS(make_preset("nonsense", 2.0, 1.0, 5, 10.0), std::invalid_argument);
}
