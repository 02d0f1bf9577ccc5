#include "metapuck/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metapuck {

std::vector<double> Trajectory::flatten() const {
  std::vector<double> flat;
  flat.reserve(kFlatSize);
  for (const auto& w : waypoints) {
    flat.push_back(w.x);
    flat.push_back(w.y);
    flat.push_back(w.yaw);
  }
  return flat;
}

Trajectory Trajectory::from_flat(const std::vector<double>& flat) {
  if (flat.size() != kFlatSize)
    throw std::invalid_argument("Trajectory::from_flat: expected " +
                                std::to_string(kFlatSize) + " values, got " +
                                std::to_string(flat.size()));
  Trajectory t;
  for (std::size_t i = 0; i < kNumWaypoints; ++i)
    t.waypoints[i] = {flat[i * 3], flat[i * 3 + 1], flat[i * 3 + 2]};
  return t;
}

bool Trajectory::finite() const {
  for (const auto& w : waypoints)
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.yaw)) return false;
  return true;
}

bool Trajectory::within_workspace() const {
  for (const auto& w : waypoints)
    if (std::abs(w.x) > kWorkspaceBound || std::abs(w.y) > kWorkspaceBound) return false;
  return true;
}

namespace {

// Swing speed profile: smoothstep ramp up, constant-speed plateau through
// the strike zone, smoothstep ramp down. The plateau spans several waypoint
// knots, so resampling at 17 uniform times keeps the contact speed intact
// (a sharp velocity peak would be averaged away by the spline).
constexpr double kRampUpTime = 0.75;   // s
constexpr double kPlateauTime = 0.5;   // s
constexpr double kRampDownTime = 0.45; // s (sums to the 1.7 s duration)
constexpr double kContactX = -0.04;    // m, puck rim is about here

// Integral of smoothstep 3u^2 - 2u^3 from 0 to u.
double smoothstep_integral(double u) { return u * u * u - 0.5 * u * u * u * u; }

double swing_position(double swing_speed, double t) {
  const double s = swing_speed;
  // Contact (plateau midpoint) pinned at kContactX.
  double x0 = kContactX - s * (0.5 * kRampUpTime + 0.5 * kPlateauTime);
  if (t <= kRampUpTime) {
    double u = t / kRampUpTime;
    return x0 + s * kRampUpTime * smoothstep_integral(u);
  }
  double x_ramp_end = x0 + 0.5 * s * kRampUpTime;
  if (t <= kRampUpTime + kPlateauTime) return x_ramp_end + s * (t - kRampUpTime);
  double x_plateau_end = x_ramp_end + s * kPlateauTime;
  double u = (t - kRampUpTime - kPlateauTime) / kRampDownTime;
  return x_plateau_end + s * kRampDownTime * (u - smoothstep_integral(u));
}

}  // namespace

Trajectory make_strike_trajectory(double swing_speed, double blade_yaw) {
  Trajectory traj;
  const double total = Trajectory::kDuration;
  for (std::size_t i = 0; i < Trajectory::kNumWaypoints; ++i) {
    double t = total * double(i) / double(Trajectory::kNumWaypoints - 1);
    traj.waypoints[i] = {swing_position(swing_speed, t), 0.0, blade_yaw};
  }
  return traj;
}

std::vector<Trajectory> generate_dataset(Rng& rng, std::size_t count) {
  if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double speed = rng.uniform(kSwingSpeedMin, kSwingSpeedMax);
    double yaw = rng.uniform(-kBladeYawMax, kBladeYawMax);
    out.push_back(make_strike_trajectory(speed, yaw));
  }
  return out;
}

void save_dataset_csv(const std::string& path, const std::vector<Trajectory>& dataset) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_dataset_csv: cannot open " + path);
  for (std::size_t i = 0; i < Trajectory::kNumWaypoints; ++i) {
    if (i) os << ",";
    os << "x" << i << ",y" << i << ",yaw" << i;
  }
  os << "\n";
  char buf[32];
  for (const auto& traj : dataset) {
    auto flat = traj.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (i) os << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", flat[i]);
      os << buf;
    }
    os << "\n";
  }
}

std::vector<Trajectory> load_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_dataset_csv: empty file " + path);
  std::vector<Trajectory> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> flat;
    flat.reserve(Trajectory::kFlatSize);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) flat.push_back(std::stod(cell));
    out.push_back(Trajectory::from_flat(flat));
  }
  return out;
}

}  // namespace metapuck
