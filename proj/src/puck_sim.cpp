#include "metapuck/puck_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "metapuck/spline.hpp"

namespace metapuck {

double PuckState::speed() const { return std::hypot(vx, vy); }

double PuckState::kinetic_energy(double mass) const {
  double inertia = 0.5 * mass * sim::kPuckRadius * sim::kPuckRadius;
  return 0.5 * mass * (vx * vx + vy * vy) + 0.5 * inertia * omega * omega;
}

Task sample_task(Rng& rng) {
  Task t;
  t.mu_x = rng.uniform(0.15, 0.95);
  t.mu_y = t.mu_x * rng.uniform(0.7, 1.3);
  t.mu_torsional = rng.uniform(0.001, 0.05);
  t.mu_rot_x = rng.uniform(0.01, 0.3);
  t.mu_rot_y = rng.uniform(0.01, 0.3);
  t.mass = rng.uniform(0.05, 0.5);
  t.start_offset = {rng.normal(0.0, 0.02), rng.normal(0.0, 0.02)};
  return t;
}

const std::vector<std::string>& fixed_task_names() {
  static const std::vector<std::string> names = {
      "isotropic_low", "isotropic_medium", "anisotropic_low_x", "anisotropic_low_y"};
  return names;
}

Task fixed_task(std::string_view name) {
  Task t;  // shared column values: mu_tau 0.01, rolling 0.1/0.1, mass 0.110, no offset
  t.mu_torsional = 0.01;
  t.mu_rot_x = 0.1;
  t.mu_rot_y = 0.1;
  t.mass = 0.110;
  t.start_offset = {0.0, 0.0};
  if (name == "isotropic_low") {
    t.mu_x = 0.15;
    t.mu_y = 0.15;
  } else if (name == "isotropic_medium") {
    t.mu_x = 0.4;
    t.mu_y = 0.4;
  } else if (name == "anisotropic_low_x") {
    t.mu_x = 0.2;
    t.mu_y = 0.8;
  } else if (name == "anisotropic_low_y") {
    t.mu_x = 0.8;
    t.mu_y = 0.2;
  } else {
    std::string valid;
    for (const auto& n : fixed_task_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("fixed_task: unknown condition '" + std::string(name) +
                                "'; valid names: " + valid);
  }
  return t;
}

namespace {

struct Vec2 {
  double x, y;
};

// Closest point on segment [a, b] to p.
Vec2 closest_on_segment(Vec2 a, Vec2 b, Vec2 p) {
  double dx = b.x - a.x, dy = b.y - a.y;
  double len2 = dx * dx + dy * dy;
  double s = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return {a.x + s * dx, a.y + s * dy};
}

}  // namespace

PuckState simulate_slide(const Task& task, PuckState state, double t0,
                         std::vector<TraceRow>* trace) {
  const double spin_decel = task.mu_torsional * sim::kGravity / sim::kPuckRadius;
  double t = t0;
  const double t_stop = t0 + sim::kMaxSlideTime;
  while (t < t_stop) {
    double speed = state.speed();
    if (speed < sim::kRestSpeed && std::abs(state.omega) < sim::kRestOmega) break;

    double vx = state.vx, vy = state.vy;
    if (speed >= sim::kRestSpeed) {
      // Anisotropic sliding friction plus rolling resistance, both opposing
      // the velocity direction componentwise. Components that would cross
      // zero this step stop at zero, which keeps the update dissipative.
      double ux = vx / speed, uy = vy / speed;
      double ax = -sim::kGravity * (task.mu_x + task.mu_rot_x) * ux;
      double ay = -sim::kGravity * (task.mu_y + task.mu_rot_y) * uy;
      double nvx = vx + ax * sim::kDt;
      double nvy = vy + ay * sim::kDt;
      if (nvx * vx < 0.0) nvx = 0.0;
      if (nvy * vy < 0.0) nvy = 0.0;
      vx = nvx;
      vy = nvy;
      // Spin curls the velocity without changing its magnitude.
      double dtheta = sim::kSpinTurnRate * task.mu_torsional * state.omega * sim::kDt;
      double c = std::cos(dtheta), s = std::sin(dtheta);
      double rx = c * vx - s * vy;
      double ry = s * vx + c * vy;
      vx = rx;
      vy = ry;
    } else {
      vx = 0.0;
      vy = 0.0;
    }
    double domega = spin_decel * sim::kDt;
    double omega = state.omega;
    omega = std::abs(omega) <= domega ? 0.0 : omega - std::copysign(domega, omega);

    state.vx = vx;
    state.vy = vy;
    state.omega = omega;
    state.x += vx * sim::kDt;  // semi-implicit: position uses the new velocity
    state.y += vy * sim::kDt;
    t += sim::kDt;
    if (trace) trace->push_back({t, state.x, state.y, state.vx, state.vy, state.omega});
  }
  if (state.speed() < sim::kRestSpeed) state.vx = state.vy = 0.0;
  if (std::abs(state.omega) < sim::kRestOmega) state.omega = 0.0;
  return state;
}

StrikeResult execute_strike(const Task& task, const Trajectory& trajectory,
                            std::vector<TraceRow>* trace) {
  if (!trajectory.finite())
    throw std::invalid_argument("execute_strike: trajectory has non-finite waypoints");

  const std::size_t n = Trajectory::kNumWaypoints;
  const double knot_dt = Trajectory::kDuration / double(n - 1);
  std::vector<double> xs(n), ys(n), yaws(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = trajectory.waypoints[i].x;
    ys[i] = trajectory.waypoints[i].y;
    yaws[i] = trajectory.waypoints[i].yaw;
  }
  CubicSpline sx(0.0, knot_dt, std::move(xs));
  CubicSpline sy(0.0, knot_dt, std::move(ys));
  CubicSpline syaw(0.0, knot_dt, std::move(yaws));

  StrikeResult result;
  result.final_state.x = task.start_offset[0];
  result.final_state.y = task.start_offset[1];
  if (trace)
    trace->push_back({0.0, result.final_state.x, result.final_state.y, 0.0, 0.0, 0.0});

  const Vec2 puck{result.final_state.x, result.final_state.y};
  for (double t = 0.0; t <= Trajectory::kDuration; t += sim::kDt) {
    double cx = sx.eval(t), cy = sy.eval(t), yaw = syaw.eval(t);
    // Blade face points along (cos yaw, sin yaw); the segment spans
    // perpendicular to it.
    double px = -std::sin(yaw), py = std::cos(yaw);
    double half = 0.5 * sim::kBladeLength;
    Vec2 a{cx - half * px, cy - half * py};
    Vec2 b{cx + half * px, cy + half * py};
    Vec2 cp = closest_on_segment(a, b, puck);
    double gapx = puck.x - cp.x, gapy = puck.y - cp.y;
    if (gapx * gapx + gapy * gapy > sim::kPuckRadius * sim::kPuckRadius) continue;

    double bvx = sx.deriv(t), bvy = sy.deriv(t);
    double nx = std::cos(yaw), ny = std::sin(yaw);
    if (gapx * nx + gapy * ny < 0.0) {  // face the puck side
      nx = -nx;
      ny = -ny;
    }
    double closing = bvx * nx + bvy * ny;
    if (closing <= 0.0) continue;  // grazing or receding: no impulse yet

    double gain = (1.0 + sim::kRestitution) * sim::kBladeMass / (sim::kBladeMass + task.mass);
    double tx = -ny, ty = nx;
    result.contact = true;
    result.contact_time = t;
    result.blade_speed = std::hypot(bvx, bvy);
    result.post_impact = result.final_state;
    result.post_impact.vx = gain * closing * nx;
    result.post_impact.vy = gain * closing * ny;
    result.post_impact.omega =
        sim::kSpinCoupling * (bvx * tx + bvy * ty) / sim::kPuckRadius;
    if (trace)
      trace->push_back({t, result.post_impact.x, result.post_impact.y,
                        result.post_impact.vx, result.post_impact.vy,
                        result.post_impact.omega});
    break;  // single contact: the blade follows through past the puck
  }

  if (result.contact)
    result.final_state = simulate_slide(task, result.post_impact, result.contact_time, trace);
  return result;
}

double reward(const PuckState& final_state, const Goal& goal) {
  double d = std::hypot(final_state.x - goal.x, final_state.y - goal.y);
  return -d * d - std::log(d + sim::kRewardShift);
}

Goal sample_goal(Rng& rng) {
  Goal g;
  g.x = rng.uniform(sim::kTargetCenterX - 0.5 * sim::kTargetSizeX,
                    sim::kTargetCenterX + 0.5 * sim::kTargetSizeX);
  g.y = rng.uniform(sim::kTargetCenterY - 0.5 * sim::kTargetSizeY,
                    sim::kTargetCenterY + 0.5 * sim::kTargetSizeY);
  return g;
}

void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_trace_csv: cannot open " + path);
  os << "t,x,y,vx,vy,omega\n";
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.t, r.x, r.y,
                  r.vx, r.vy, r.omega);
    os << buf;
  }
}

}  // namespace metapuck
