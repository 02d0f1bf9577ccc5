#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "metapuck/rng.hpp"
#include "metapuck/trajectory.hpp"

namespace metapuck {

// Board geometry and contact/integration constants. The puck starts near
// the origin; the strike aims it at a rectangular target region downrange.
namespace sim {
constexpr double kGravity = 9.81;        // m/s^2
constexpr double kPuckRadius = 0.0382;   // m
constexpr double kBladeLength = 0.30;    // m
constexpr double kBladeMass = 1.0;       // kg, effective mass behind the blade
constexpr double kRestitution = 0.5;
constexpr double kSpinCoupling = 0.3;    // tangential blade speed -> spin
constexpr double kSpinTurnRate = 0.5;    // rad^-1, spin -> velocity curl
constexpr double kDt = 1e-3;             // s
constexpr double kRestSpeed = 1e-3;      // m/s
constexpr double kRestOmega = 1e-2;      // rad/s
constexpr double kMaxSlideTime = 10.0;   // s
constexpr double kTargetCenterX = 1.0;   // m
constexpr double kTargetCenterY = 0.0;   // m
constexpr double kTargetSizeX = 0.50;    // m
constexpr double kTargetSizeY = 0.30;    // m
constexpr double kRewardShift = 1e-3;    // m, keeps the log term finite at d=0
}  // namespace sim

// One dynamics condition: friction coefficients, puck mass, start offset.
struct Task {
  double mu_x = 0.4;
  double mu_y = 0.4;
  double mu_torsional = 0.01;
  double mu_rot_x = 0.1;   // rolling resistance along x
  double mu_rot_y = 0.1;   // rolling resistance along y
  double mass = 0.110;     // kg
  std::array<double, 2> start_offset{0.0, 0.0};  // m
};

struct PuckState {
  double x = 0.0, y = 0.0;    // m
  double vx = 0.0, vy = 0.0;  // m/s
  double omega = 0.0;         // rad/s

  double speed() const;
  double kinetic_energy(double mass) const;
};

struct Goal {
  double x = sim::kTargetCenterX;
  double y = sim::kTargetCenterY;
};

struct TraceRow {
  double t, x, y, vx, vy, omega;
};

struct StrikeResult {
  PuckState final_state;
  bool contact = false;
  double contact_time = 0.0;   // s into the sweep
  double blade_speed = 0.0;    // |blade velocity| at contact, m/s
  PuckState post_impact;       // state right after the impulse
};

// Uniform draw from the randomization ranges; start offset is Gaussian
// with 0.02 m per-axis standard deviation.
Task sample_task(Rng& rng);

// Named benchmark conditions: isotropic_low, isotropic_medium,
// anisotropic_low_x, anisotropic_low_y. Unknown names throw and the message
// lists the valid ones.
Task fixed_task(std::string_view name);
const std::vector<std::string>& fixed_task_names();

// Sweeps the blade along the spline through the 17 waypoints; on first
// valid contact applies the impulse model, then slides the puck to rest.
// No contact returns the unmoved initial state. Deterministic.
StrikeResult execute_strike(const Task& task, const Trajectory& trajectory,
                            std::vector<TraceRow>* trace = nullptr);

// Free sliding only (no blade): the dissipative integrator behind
// execute_strike, exposed for direct physics checks.
PuckState simulate_slide(const Task& task, PuckState state, double t0 = 0.0,
                         std::vector<TraceRow>* trace = nullptr);

double reward(const PuckState& final_state, const Goal& goal);
Goal sample_goal(Rng& rng);

void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

}  // namespace metapuck
