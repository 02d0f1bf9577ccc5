#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <vector>

#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/trajectory.hpp"

using namespace metapuck;

namespace {

// Constant-deceleration stopping distance for isotropic friction with no
// spin and no rolling resistance: d = v0^2 / (2 mu g).
double stopping_distance_oracle(double v0, double mu) {
  return v0 * v0 / (2.0 * mu * sim::kGravity);
}

Task bare_isotropic(double mu) {
  Task t;
  t.mu_x = mu;
  t.mu_y = mu;
  t.mu_torsional = 0.0;
  t.mu_rot_x = 0.0;
  t.mu_rot_y = 0.0;
  t.mass = 0.110;
  t.start_offset = {0.0, 0.0};
  return t;
}

}  // namespace

TEST_CASE("sample_task: ranges and moments over 1e5 draws") {
  Rng rng(101);
  const int n = 100000;
  double mu_x_min = 1e9, mu_x_max = -1e9, mu_x_sum = 0;
  double off_sq = 0;
  for (int i = 0; i < n; ++i) {
    Task t = sample_task(rng);
    REQUIRE(t.mu_x >= 0.15);
    REQUIRE(t.mu_x <= 0.95);
    REQUIRE(t.mu_y / t.mu_x >= 0.7 - 1e-12);
    REQUIRE(t.mu_y / t.mu_x <= 1.3 + 1e-12);
    REQUIRE(t.mu_torsional >= 0.001);
    REQUIRE(t.mu_torsional <= 0.05);
    REQUIRE(t.mu_rot_x >= 0.01);
    REQUIRE(t.mu_rot_x <= 0.3);
    REQUIRE(t.mu_rot_y >= 0.01);
    REQUIRE(t.mu_rot_y <= 0.3);
    REQUIRE(t.mass >= 0.05);
    REQUIRE(t.mass <= 0.5);
    mu_x_min = std::min(mu_x_min, t.mu_x);
    mu_x_max = std::max(mu_x_max, t.mu_x);
    mu_x_sum += t.mu_x;
    off_sq += t.start_offset[0] * t.start_offset[0] + t.start_offset[1] * t.start_offset[1];
  }
  CHECK(mu_x_sum / n == doctest::Approx(0.55).epsilon(0.02));
  CHECK(mu_x_min < 0.16);  // the sampler reaches both ends of the range
  CHECK(mu_x_max > 0.94);
  double off_std = std::sqrt(off_sq / (2.0 * n));
  CHECK(off_std == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("fixed_task: benchmark condition table") {
  Task t = fixed_task("isotropic_low");
  CHECK(t.mu_x == 0.15);
  CHECK(t.mu_y == 0.15);
  CHECK(t.mu_torsional == 0.01);
  CHECK(t.mu_rot_x == 0.1);
  CHECK(t.mu_rot_y == 0.1);
  CHECK(t.mass == 0.110);
  CHECK(t.start_offset[0] == 0.0);
  CHECK(t.start_offset[1] == 0.0);

  t = fixed_task("isotropic_medium");
  CHECK(t.mu_x == 0.4);
  CHECK(t.mu_y == 0.4);

  t = fixed_task("anisotropic_low_x");
  CHECK(t.mu_x == 0.2);
  CHECK(t.mu_y == 0.8);

  t = fixed_task("anisotropic_low_y");
  CHECK(t.mu_x == 0.8);
  CHECK(t.mu_y == 0.2);

  CHECK_THROWS_WITH_AS(fixed_task("slippery"),
                       doctest::Contains("isotropic_low"), std::invalid_argument);
}

TEST_CASE("execute_strike: a far-away sweep never touches the puck") {
  Task task = fixed_task("isotropic_low");
  Trajectory traj = make_strike_trajectory(2.0, 0.0);
  for (auto& w : traj.waypoints) w.y += 1.5;  // shifted sideways, clear of the puck
  StrikeResult res = execute_strike(task, traj);
  CHECK_FALSE(res.contact);
  CHECK(res.final_state.x == 0.0);
  CHECK(res.final_state.y == 0.0);
  CHECK(res.final_state.speed() == 0.0);
}

TEST_CASE("execute_strike: rejects non-finite waypoints") {
  Task task = fixed_task("isotropic_low");
  Trajectory traj = make_strike_trajectory(2.0, 0.0);
  traj.waypoints[8].x = std::nan("");
  CHECK_THROWS_AS(execute_strike(task, traj), std::invalid_argument);
}

TEST_CASE("simulate_slide: stopping distance matches the closed form within 1%") {
  // 5x5 grid over launch speed and isotropic friction.
  const double speeds[] = {1.2, 1.7, 2.2, 2.7, 3.2};
  const double mus[] = {0.15, 0.35, 0.55, 0.75, 0.95};
  for (double v0 : speeds) {
    for (double mu : mus) {
      PuckState s;
      s.vx = v0;
      PuckState done = simulate_slide(bare_isotropic(mu), s);
      double oracle = stopping_distance_oracle(v0, mu);
      double rel = std::abs(done.x - oracle) / oracle;
      CHECK_MESSAGE(rel < 0.01, "v0=", v0, " mu=", mu, " got=", done.x,
                    " want=", oracle);
      CHECK(std::abs(done.y) < 1e-12);  // straight-line slide
    }
  }
  // The worked single case: v0 = 2 m/s, mu = 0.5.
  PuckState s;
  s.vx = 2.0;
  PuckState done = simulate_slide(bare_isotropic(0.5), s);
  CHECK(done.x == doctest::Approx(0.40775).epsilon(0.01));
}

TEST_CASE("execute_strike: doubling the mass weakens the launch") {
  Trajectory traj = make_strike_trajectory(2.0, 0.1);
  Task light = fixed_task("isotropic_low");
  Task heavy = light;
  heavy.mass = 2.0 * light.mass;
  StrikeResult a = execute_strike(light, traj);
  StrikeResult b = execute_strike(heavy, traj);
  REQUIRE(a.contact);
  REQUIRE(b.contact);
  CHECK(b.post_impact.speed() < a.post_impact.speed());
}

TEST_CASE("execute_strike: identical inputs give bit-identical results") {
  Task task = fixed_task("anisotropic_low_x");
  Trajectory traj = make_strike_trajectory(2.4, -0.35);
  StrikeResult a = execute_strike(task, traj);
  StrikeResult b = execute_strike(task, traj);
  CHECK(a.final_state.x == b.final_state.x);
  CHECK(a.final_state.y == b.final_state.y);
  CHECK(a.contact_time == b.contact_time);
  CHECK(a.post_impact.vx == b.post_impact.vx);
  CHECK(a.post_impact.omega == b.post_impact.omega);
}

TEST_CASE("kinetic energy never increases while sliding") {
  Rng rng(707);
  for (int trial = 0; trial < 20; ++trial) {
    Task task = sample_task(rng);
    task.start_offset = {0.0, 0.0};
    PuckState s;
    double ang = rng.uniform(0.0, 6.283185307179586);
    double v0 = rng.uniform(0.5, 4.0);
    s.vx = v0 * std::cos(ang);
    s.vy = v0 * std::sin(ang);
    s.omega = rng.uniform(-30.0, 30.0);
    std::vector<TraceRow> trace;
    simulate_slide(task, s, 0.0, &trace);
    double prev = s.kinetic_energy(task.mass);
    for (const auto& row : trace) {
      PuckState cur{row.x, row.y, row.vx, row.vy, row.omega};
      double ke = cur.kinetic_energy(task.mass);
      REQUIRE(ke <= prev + 1e-12);
      prev = ke;
    }
  }
}

TEST_CASE("isotropic friction without spin keeps the slide straight") {
  Task task = bare_isotropic(0.4);
  task.mu_rot_x = 0.1;
  task.mu_rot_y = 0.1;
  for (double ang : {0.3, 1.1, 2.0, -2.4}) {
    PuckState s;
    s.vx = 1.8 * std::cos(ang);
    s.vy = 1.8 * std::sin(ang);
    PuckState done = simulate_slide(task, s);
    double travel = std::atan2(done.y, done.x);
    double diff = std::remainder(travel - ang, 2.0 * std::numbers::pi);
    CHECK(std::abs(diff) < 1e-6);
  }
}

TEST_CASE("anisotropic friction bends a 45-degree launch toward the easy axis") {
  PuckState s;
  s.vx = 1.6;
  s.vy = 1.6;

  Task low_x = fixed_task("anisotropic_low_x");  // x slides easily
  PuckState a = simulate_slide(low_x, s);
  CHECK(a.x > a.y);  // finished closer to the x axis

  Task low_y = fixed_task("anisotropic_low_y");
  PuckState b = simulate_slide(low_y, s);
  CHECK(b.y > b.x);
}

TEST_CASE("travel distance is non-increasing in every friction coefficient") {
  auto travel = [](const Task& t) {
    PuckState s;
    s.vx = 1.7;
    s.vy = 0.9;
    s.omega = 8.0;
    PuckState done = simulate_slide(t, s);
    return std::hypot(done.x, done.y);
  };
  Task base = fixed_task("isotropic_medium");
  const double bumps[] = {0.05, 0.15, 0.3};
  double prev = travel(base);
  for (double b : bumps) {  // mu_x
    Task t = base;
    t.mu_x += b;
    double d = travel(t);
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
  prev = travel(base);
  for (double b : bumps) {  // mu_y
    Task t = base;
    t.mu_y += b;
    double d = travel(t);
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
  prev = travel(base);
  for (double b : {0.02, 0.06, 0.1}) {  // rolling resistance
    Task t = base;
    t.mu_rot_x += b;
    t.mu_rot_y += b;
    double d = travel(t);
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
}

TEST_CASE("spin makes the slide curve, and its sign picks the side") {
  Task task = fixed_task("isotropic_low");
  PuckState s;
  s.vx = 2.0;

  PuckState straight = simulate_slide(task, s);
  CHECK(std::abs(straight.y) < 1e-9);

  s.omega = 20.0;
  PuckState curl_pos = simulate_slide(task, s);
  s.omega = -20.0;
  PuckState curl_neg = simulate_slide(task, s);
  CHECK(curl_pos.y > 1e-4);   // positive spin turns the velocity CCW
  CHECK(curl_neg.y < -1e-4);
  CHECK(curl_pos.y == doctest::Approx(-curl_neg.y).epsilon(1e-9));  // mirror symmetry
}

TEST_CASE("reward: closed-form values and monotonicity") {
  Goal g{1.0, 0.0};
  PuckState at_goal;
  at_goal.x = 1.0;
  CHECK(reward(at_goal, g) == doctest::Approx(6.907755278982137).epsilon(1e-12));

  PuckState one_meter;  // d = 1
  one_meter.x = 2.0;
  CHECK(reward(one_meter, g) == doctest::Approx(-1.0 - std::log(1.001)).epsilon(1e-12));

  double prev = reward(at_goal, g);
  for (double d : {0.01, 0.05, 0.2, 0.5, 1.0, 2.0}) {
    PuckState p;
    p.x = 1.0 + d;
    double r = reward(p, g);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("sample_goal: uniform over the target rectangle") {
  Rng rng(55);
  const int n = 10000;
  double sx = 0, sy = 0, min_x = 1e9, max_x = -1e9;
  for (int i = 0; i < n; ++i) {
    Goal g = sample_goal(rng);
    REQUIRE(g.x >= sim::kTargetCenterX - 0.25);
    REQUIRE(g.x <= sim::kTargetCenterX + 0.25);
    REQUIRE(g.y >= -0.15);
    REQUIRE(g.y <= 0.15);
    sx += g.x;
    sy += g.y;
    min_x = std::min(min_x, g.x);
    max_x = std::max(max_x, g.x);
  }
  CHECK(sx / n == doctest::Approx(sim::kTargetCenterX).epsilon(0.01));
  CHECK(std::abs(sy / n) < 0.01);
  CHECK(max_x - min_x > 0.95 * sim::kTargetSizeX);
}

TEST_CASE("trace export: contact and slide rows land in the CSV") {
  Task task = fixed_task("isotropic_low");
  Trajectory traj = make_strike_trajectory(2.0, 0.0);
  std::vector<TraceRow> trace;
  StrikeResult res = execute_strike(task, traj, &trace);
  REQUIRE(res.contact);
  REQUIRE(trace.size() > 100);

  std::string path = "trace_test.csv";
  save_trace_csv(path, trace);
  std::ifstream is(path);
  REQUIRE(is.good());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,x,y,vx,vy,omega");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == trace.size());
  std::remove(path.c_str());
}
