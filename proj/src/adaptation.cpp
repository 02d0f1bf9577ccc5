#include "metapuck/adaptation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "metapuck/stats.hpp"

namespace metapuck {

using ad::ParamSet;
using ad::Tensor;

std::vector<Rollout> collect_rollouts(const ParamSet& policy, const Task& task,
                                      const VaeModel& vae, std::size_t k, Rng& rng,
                                      const Goal* fixed_goal) {
  if (k < 2) throw std::invalid_argument("collect_rollouts: need at least 2 rollouts");
  std::vector<Rollout> rollouts;
  rollouts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Rollout r;
    r.goal = fixed_goal ? *fixed_goal : sample_goal(rng);
    ad::DiagonalGaussian dist = act_distribution(policy, r.goal);
    ActionSample sample = sample_action(dist, rng);
    r.action = sample.z;
    r.log_density = sample.log_density;
    StrikeResult res = execute_strike(task, decode(vae, r.action));
    r.reward = reward(res.final_state, r.goal);
    rollouts.push_back(r);
  }
  return rollouts;
}

std::vector<double> normalize_rewards(const std::vector<double>& rewards) {
  if (rewards.size() < 2)
    throw std::invalid_argument("normalize_rewards: need at least 2 rewards");
  double m = stats::mean(rewards);
  double sd = stats::stddev(rewards);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < 1e-8) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - m) / sd;
  return out;
}

Tensor vpg_loss(const ParamSet& policy, const std::vector<Rollout>& rollouts,
                const std::vector<double>& normalized_rewards) {
  if (rollouts.size() != normalized_rewards.size())
    throw std::invalid_argument("vpg_loss: rollouts and rewards are misaligned");
  if (rollouts.empty()) throw std::invalid_argument("vpg_loss: no rollouts");
  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    ad::DiagonalGaussian dist = act_distribution(policy, rollouts[i].goal);
    Tensor z = Tensor::constant({2}, {rollouts[i].action[0], rollouts[i].action[1]});
    Tensor logp = gaussian_log_density(dist, z);
    acc = ad::add(acc, ad::mul_scalar(logp, normalized_rewards[i]));
  }
  return ad::mul_scalar(acc, -1.0 / double(rollouts.size()));
}

ParamSet adapt_step(const ParamSet& policy, const Task& task, const VaeModel& vae,
                    double alpha, std::size_t k, Rng& rng, bool differentiable) {
  if (alpha < 0.0) throw std::invalid_argument("adapt_step: alpha must be non-negative");
  auto rollouts = collect_rollouts(policy, task, vae, k, rng);
  std::vector<double> rewards(rollouts.size());
  for (std::size_t i = 0; i < rollouts.size(); ++i) rewards[i] = rollouts[i].reward;
  Tensor loss = vpg_loss(policy, rollouts, normalize_rewards(rewards));
  ad::Gradients grads = ad::backward(loss, /*create_graph=*/differentiable);
  ParamSet updated = functional_update(policy, gradients_as_params(policy, grads), alpha);
  return differentiable ? updated : updated.detach().clone_parameters();
}

AdaptationTrace adapt(const ParamSet& policy, const Task& task, const VaeModel& vae,
                      double alpha, std::size_t k, std::size_t n, Rng& rng) {
  AdaptationTrace trace;
  trace.snapshots.push_back(policy.clone_parameters());
  for (std::size_t step = 0; step < n; ++step) {
    const ParamSet& current = trace.snapshots.back();
    AdaptStepRecord rec;
    rec.rollouts = collect_rollouts(current, task, vae, k, rng);
    std::vector<double> rewards(rec.rollouts.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) rewards[i] = rec.rollouts[i].reward;
    rec.normalized_rewards = normalize_rewards(rewards);
    Tensor loss = vpg_loss(current, rec.rollouts, rec.normalized_rewards);
    ad::Gradients grads = ad::backward(loss);
    ParamSet g = gradients_as_params(current, grads);
    rec.loss_value = loss.value();
    rec.grad_norm = grad_norm(g);
    trace.steps.push_back(std::move(rec));
    trace.snapshots.push_back(
        functional_update(current, g, alpha).detach().clone_parameters());
  }
  return trace;
}

void save_adaptation_rollouts_csv(const std::string& path, const AdaptationTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_adaptation_rollouts_csv: cannot open " + path);
  os << "step,rollout_index,goal_x,goal_y,z0,z1,reward\n";
  char buf[200];
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& rollouts = trace.steps[s].rollouts;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
      const Rollout& r = rollouts[i];
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", s, i,
                    r.goal.x, r.goal.y, r.action[0], r.action[1], r.reward);
      os << buf;
    }
  }
}

void save_adaptation_summary_csv(const std::string& path, const AdaptationTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_adaptation_summary_csv: cannot open " + path);
  os << "step,mean_reward,loss,grad_norm\n";
  char buf[160];
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& rec = trace.steps[s];
    std::vector<double> rewards(rec.rollouts.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) rewards[i] = rec.rollouts[i].reward;
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", s, stats::mean(rewards),
                  rec.loss_value, rec.grad_norm);
    os << buf;
  }
}

}  // namespace metapuck
