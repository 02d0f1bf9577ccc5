#include "metapuck/policy.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace metapuck {

using ad::ParamSet;
using ad::Tensor;

namespace {
ad::MlpSpec mean_spec(std::size_t hidden) { return {{2, hidden, 2}, "mean"}; }
}  // namespace

ParamSet make_policy(Rng& rng, std::size_t hidden) {
  ParamSet p;
  init_mlp(p, mean_spec(hidden), rng);
  p.add("log_std", Tensor::parameter({2}, {std::log(kPolicyInitStd), std::log(kPolicyInitStd)}));
  return p;
}

std::size_t policy_hidden(const ParamSet& policy) { return policy.get("mean.W0").rows(); }

std::array<double, 2> normalize_goal(const Goal& goal) {
  return {(goal.x - sim::kTargetCenterX) / (0.5 * sim::kTargetSizeX),
          (goal.y - sim::kTargetCenterY) / (0.5 * sim::kTargetSizeY)};
}

Goal denormalize_goal(const std::array<double, 2>& n) {
  return {sim::kTargetCenterX + n[0] * 0.5 * sim::kTargetSizeX,
          sim::kTargetCenterY + n[1] * 0.5 * sim::kTargetSizeY};
}

ad::DiagonalGaussian act_distribution(const ParamSet& policy, const Goal& goal) {
  auto n = normalize_goal(goal);
  Tensor input = Tensor::constant({2}, {n[0], n[1]});
  ad::DiagonalGaussian dist;
  dist.mean = forward_mlp(policy, mean_spec(policy_hidden(policy)), input);
  dist.log_std = policy.get("log_std");
  return dist;
}

ActionSample sample_action(const ad::DiagonalGaussian& dist, Rng& rng) {
  Tensor draw = gaussian_sample(dist, rng);
  ActionSample out;
  out.z = {draw.at(0), draw.at(1)};
  out.log_density = gaussian_log_density(dist, draw.detach()).value();
  return out;
}

LatentAction mean_action(const ParamSet& policy, const Goal& goal) {
  ad::DiagonalGaussian dist = act_distribution(policy, goal);
  return {dist.mean.at(0), dist.mean.at(1)};
}

void save_policy(const ParamSet& policy, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_policy: cannot open " + path);
  os << "metapuck-policy 1\n";
  os << "hidden " << policy_hidden(policy) << "\n";
  policy.save(os);
}

ParamSet load_policy(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_policy: cannot open " + path);
  std::string tag, key;
  int version = 0;
  std::size_t hidden = 0;
  if (!(is >> tag >> version) || tag != "metapuck-policy" || version != 1)
    throw std::runtime_error("load_policy: not a metapuck-policy v1 file: " + path);
  if (!(is >> key >> hidden) || key != "hidden")
    throw std::runtime_error("load_policy: missing hidden size");
  ParamSet p = ParamSet::load(is);
  if (!p.has("log_std") || policy_hidden(p) != hidden)
    throw std::runtime_error("load_policy: architecture metadata mismatch");
  return p;
}

}  // namespace metapuck
