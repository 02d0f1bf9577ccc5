#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "metapuck/nn.hpp"
#include "metapuck/param_set.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/vae.hpp"

namespace metapuck {

// The policy is a plain ParamSet: a goal-conditioned mean head
// ("mean.W0/b0/W1/b1", 2 -> hidden -> 2) plus a state-independent
// "log_std" 2-vector. Keeping it a ParamSet lets gradient-tracked
// functional updates produce adapted policies of the same shape.
constexpr std::size_t kPolicyHidden = 128;
constexpr double kPolicyInitStd = 0.5;  // generous coverage of |z| <~ 2

ad::ParamSet make_policy(Rng& rng, std::size_t hidden = kPolicyHidden);

// Hidden width recovered from the parameter shapes.
std::size_t policy_hidden(const ad::ParamSet& policy);

// Affine bijection of the target rectangle onto [-1, 1]^2.
std::array<double, 2> normalize_goal(const Goal& goal);
Goal denormalize_goal(const std::array<double, 2>& n);

// pi(z | goal): mean from the MLP, std from the learned log-std entries.
// Differentiable w.r.t. the policy parameters.
ad::DiagonalGaussian act_distribution(const ad::ParamSet& policy, const Goal& goal);

struct ActionSample {
  LatentAction z;
  double log_density;  // of z under the sampling distribution
};

// Reparameterized draw; the returned density equals
// gaussian_log_density(dist, z) evaluated at the drawn point.
ActionSample sample_action(const ad::DiagonalGaussian& dist, Rng& rng);

// Distribution mean as a concrete action (deterministic evaluation).
LatentAction mean_action(const ad::ParamSet& policy, const Goal& goal);

void save_policy(const ad::ParamSet& policy, const std::string& path);
ad::ParamSet load_policy(const std::string& path);

}  // namespace metapuck
