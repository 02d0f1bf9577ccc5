#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "metapuck/rng.hpp"

namespace metapuck {

struct Waypoint {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double yaw = 0.0;  // rad, blade facing direction
};

// One blade strike: 17 poses at uniform times across a fixed 1.7 s sweep.
struct Trajectory {
  static constexpr std::size_t kNumWaypoints = 17;
  static constexpr double kDuration = 1.7;       // s
  static constexpr double kWorkspaceBound = 2.0; // m, |x| and |y| limit
  static constexpr std::size_t kFlatSize = kNumWaypoints * 3;

  std::array<Waypoint, kNumWaypoints> waypoints{};

  // Waypoint-major (x, y, yaw) order; 51 values. This is the VAE's view.
  std::vector<double> flatten() const;
  static Trajectory from_flat(const std::vector<double>& flat);

  bool finite() const;
  bool within_workspace() const;
};

// Swing profile with two cubic phases meeting at the puck: approach from
// 0.45 m behind the origin, pass through it at the requested speed 0.9 s in,
// then decelerate to rest 0.35 m beyond. The blade keeps a constant yaw;
// yaw != 0 strikes the puck obliquely, which both redirects it and spins it.
Trajectory make_strike_trajectory(double swing_speed, double blade_yaw);

// Randomized strikes: swing speed uniform in [0.5, 3.0] m/s, blade yaw
// uniform in [-0.6, 0.6] rad. These two scalars are the only degrees of
// freedom, so the 51-coordinate dataset lives on a 2-D manifold.
std::vector<Trajectory> generate_dataset(Rng& rng, std::size_t count = 7371);

constexpr double kSwingSpeedMin = 0.5;   // m/s
constexpr double kSwingSpeedMax = 3.0;   // m/s
constexpr double kBladeYawMax = 0.6;     // rad

void save_dataset_csv(const std::string& path, const std::vector<Trajectory>& dataset);
std::vector<Trajectory> load_dataset_csv(const std::string& path);

}  // namespace metapuck
