#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "metapuck/param_set.hpp"
#include "metapuck/policy.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/vae.hpp"

namespace metapuck {

struct Rollout {
  Goal goal;
  LatentAction action{};
  double log_density = 0.0;  // under the generating policy; cross-check only
  double reward = 0.0;
};

// K full episodes: sample goal, sample z, decode, strike, score. Pass
// fixed_goal to pin every episode on one goal (paired evaluations).
std::vector<Rollout> collect_rollouts(const ad::ParamSet& policy, const Task& task,
                                      const VaeModel& vae, std::size_t k, Rng& rng,
                                      const Goal* fixed_goal = nullptr);

// (r - mean) / population-std; a near-constant batch (std < 1e-8) maps to
// all zeros so a degenerate policy yields a zero gradient, not a blow-up.
std::vector<double> normalize_rewards(const std::vector<double>& rewards);

// L = -(1/K) sum r~_k log pi(z_k | goal_k), log-densities recomputed
// differentiably from the stored (goal, action) pairs under `policy`.
ad::Tensor vpg_loss(const ad::ParamSet& policy, const std::vector<Rollout>& rollouts,
                    const std::vector<double>& normalized_rewards);

// One Algorithm-1 update: collect K rollouts, normalize, SGD step of size
// alpha. With differentiable=true the inner gradient stays in the graph so
// an outer loss can differentiate through the step; otherwise the result is
// detached fresh leaves with identical values.
ad::ParamSet adapt_step(const ad::ParamSet& policy, const Task& task, const VaeModel& vae,
                        double alpha, std::size_t k, Rng& rng, bool differentiable = false);

struct AdaptStepRecord {
  std::vector<Rollout> rollouts;
  std::vector<double> normalized_rewards;
  double loss_value = 0.0;
  double grad_norm = 0.0;
};

struct AdaptationTrace {
  std::vector<ad::ParamSet> snapshots;   // N+1 entries, head is the input policy
  std::vector<AdaptStepRecord> steps;    // N entries
};

// N sequential (non-differentiable) adaptation steps with full diagnostics.
AdaptationTrace adapt(const ad::ParamSet& policy, const Task& task, const VaeModel& vae,
                      double alpha, std::size_t k, std::size_t n, Rng& rng);

void save_adaptation_rollouts_csv(const std::string& path, const AdaptationTrace& trace);
void save_adaptation_summary_csv(const std::string& path, const AdaptationTrace& trace);

}  // namespace metapuck
