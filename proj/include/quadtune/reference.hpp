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

#ifndef QUADTUNE_REFERENCE_HPP
#define QUADTUNE_REFERENCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quadtune/dynamics.hpp"

namespace qtune {

/// One piecewise-polynomial segment: 8 coefficients (ascending powers, local
/// time) per axis for x, y, z, yaw. Yaw uses a 4th-order fit, upper
/// coefficients stay zero.
struct PolySegment {
  Eigen::Matrix<double, 8, 4> coeffs = Eigen::Matrix<double, 8, 4>::Zero();
  double duration = 0.0;
};

struct Waypoint {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double t = 0.0;
};

/// Constant + single-sinusoid force profile per axis plus a constant torque.
struct WindProfile {
  Eigen::Vector3d force_const = Eigen::Vector3d::Zero();   // [N]
  Eigen::Vector3d force_amp = Eigen::Vector3d::Zero();     // [N]
  Eigen::Vector3d force_freq = Eigen::Vector3d::Zero();    // [Hz]
  Eigen::Vector3d force_phase = Eigen::Vector3d::Zero();   // [rad]
  Eigen::Vector3d torque_const = Eigen::Vector3d::Zero();  // [N m]
};

struct Task {
  std::vector<PolySegment> segments;
  WindProfile wind;
  std::uint64_t seed = 0;
  std::string name;

  double total_duration() const {
    double d = 0.0;
    for (const auto& s : segments) d += s.duration;
    return d;
  }
};

struct RefPoint {
  Eigen::Vector3d p_d = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_d = Eigen::Vector3d::Zero();
  Eigen::Vector3d a_d = Eigen::Vector3d::Zero();
  Eigen::Vector3d jerk_d = Eigen::Vector3d::Zero();
  double yaw_d = 0.0;
  double yaw_rate_d = 0.0;
};

/**
 * Minimum-snap interpolation through the waypoints: per position axis a
 * 7th-order piecewise polynomial minimizing the integral of squared snap,
 * with exact waypoint interpolation, zero velocity/acceleration/jerk at the
 * trajectory endpoints and C^4 continuity at interior knots. Yaw minimizes
 * squared angular acceleration with a 4th-order fit.
 *
 * Solved as one dense KKT system per axis. Throws std::invalid_argument for
 * fewer than two waypoints or non-increasing times.
 */
std::vector<PolySegment> solve_min_snap(const std::vector<Waypoint>& waypoints);

/// Evaluate the reference at time t [s]; t outside [0, duration] clamps to
/// the endpoint with zeroed derivatives.
RefPoint eval_ref(const Task& task, double t);

/// Wind disturbance realized by the task at time t.
Disturbance eval_wind(const Task& task, double t);

/// Ranges defining the task distribution.
struct DifficultyConfig {
  double force_const_max = 2.0;   // per-axis constant force bound [N]
  double force_amp_max = 1.0;     // per-axis sinusoid amplitude bound [N]
  double force_freq_max = 1.0;    // sinusoid frequency bound [Hz]
  double torque_max = 2.0;        // total torque magnitude bound [N m]
  Eigen::Vector3d box_center = {0.0, 0.0, -2.0};
  Eigen::Vector3d box_half = {3.0, 3.0, 1.0};
  int waypoint_count = 5;
  double min_duration = 10.0;     // [s]; must cover the rollout horizon
  double segment_time_min = 2.0;  // [s]
  double segment_time_max = 4.0;  // [s]
};

/// Deterministic task sampling: the same seed yields the same task list.
std::vector<Task> sample_tasks(std::uint64_t seed, int count,
                               const DifficultyConfig& cfg);

/// Named trajectory presets: "hover", "2d_circle", "3d_circle", "figure8".
/// `speed` sets the nominal path speed [m/s], `wind_level` the torque
/// magnitude [N m] (force scales with it as in the task distribution).
Task make_preset(const std::string& category, double speed, double wind_level,
                 std::uint64_t seed, double duration);

}  // namespace qtune

#endif  // QUADTUNE_REFERENCE_HPP
