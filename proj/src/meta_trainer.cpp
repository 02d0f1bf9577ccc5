#include "metapuck/meta_trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#include "metapuck/stats.hpp"

namespace metapuck {

using ad::ParamSet;
using ad::Tensor;

void MetaConfig::validate() const {
  if (tasks_per_batch < 1)
    throw std::invalid_argument("MetaConfig: tasks_per_batch must be >= 1");
  if (rollouts_per_step < 2)
    throw std::invalid_argument("MetaConfig: rollouts_per_step must be >= 2");
  if (!(clip_epsilon > 0.0) || !(clip_epsilon < 1.0))
    throw std::invalid_argument("MetaConfig: clip_epsilon must lie in (0, 1)");
  if (ppo_epochs < 1) throw std::invalid_argument("MetaConfig: ppo_epochs must be >= 1");
  if (!(alpha_init > 0.0)) throw std::invalid_argument("MetaConfig: alpha_init must be > 0");
  if (!(outer_lr > 0.0)) throw std::invalid_argument("MetaConfig: outer_lr must be > 0");
  if (iterations < 1) throw std::invalid_argument("MetaConfig: iterations must be >= 1");
  if (policy_hidden < 1) throw std::invalid_argument("MetaConfig: policy_hidden must be >= 1");
}

double LearnedAlpha::value() const { return std::exp(log_tensor().value()); }

LearnedAlpha make_learned_alpha(double alpha_init) {
  if (!(alpha_init > 0.0))
    throw std::invalid_argument("make_learned_alpha: alpha_init must be > 0");
  LearnedAlpha alpha;
  alpha.params.add("log_alpha", Tensor::parameter({1}, {std::log(alpha_init)}));
  return alpha;
}

namespace {

std::vector<double> rewards_of(const std::vector<Rollout>& rollouts) {
  std::vector<double> r(rollouts.size());
  for (std::size_t i = 0; i < rollouts.size(); ++i) r[i] = rollouts[i].reward;
  return r;
}

}  // namespace

MetaBatch collect_meta_batch(const ParamSet& policy, const VaeModel& vae,
                             const MetaConfig& cfg, double alpha, Rng& rng,
                             const Task* fixed_task) {
  cfg.validate();
  MetaBatch batch;
  batch.tasks.reserve(cfg.tasks_per_batch);
  for (std::size_t b = 0; b < cfg.tasks_per_batch; ++b) {
    TaskBatch tb;
    tb.task = fixed_task ? *fixed_task : sample_task(rng);
    // Value-only inner chain; the arithmetic matches the graph rebuild
    // bit-for-bit, so the first-epoch probability ratios are exactly 1.
    ParamSet theta = policy.detach().clone_parameters();
    for (std::size_t n = 0; n < cfg.adapt_steps; ++n) {
      auto rollouts = collect_rollouts(theta, tb.task, vae, cfg.rollouts_per_step, rng);
      auto advantages = normalize_rewards(rewards_of(rollouts));
      Tensor loss = vpg_loss(theta, rollouts, advantages);
      ParamSet grads = gradients_as_params(theta, ad::backward(loss));
      theta = functional_update(theta, grads, alpha).detach().clone_parameters();
      tb.inner_rollouts.push_back(std::move(rollouts));
      tb.inner_advantages.push_back(std::move(advantages));
    }
    tb.outer_rollouts = collect_rollouts(theta, tb.task, vae, cfg.rollouts_per_step, rng);
    tb.outer_advantages = normalize_rewards(rewards_of(tb.outer_rollouts));
    batch.tasks.push_back(std::move(tb));
  }
  return batch;
}

ParamSet adapted_params_on_batch(const ParamSet& policy, const Tensor& log_alpha,
                                 const MetaConfig& cfg, const TaskBatch& batch) {
  Tensor alpha = ad::exp(log_alpha);
  ParamSet theta = policy;
  for (std::size_t n = 0; n < batch.inner_rollouts.size(); ++n) {
    Tensor loss = vpg_loss(theta, batch.inner_rollouts[n], batch.inner_advantages[n]);
    ad::Gradients grads = ad::backward(loss, /*create_graph=*/!cfg.first_order);
    theta = functional_update(theta, gradients_as_params(theta, grads), alpha);
  }
  return theta;
}

Tensor outer_loss_on_batch(const ParamSet& policy, const Tensor& log_alpha,
                           const MetaConfig& cfg, const MetaBatch& batch) {
  if (batch.tasks.empty()) throw std::invalid_argument("outer_loss_on_batch: empty batch");
  Tensor acc = Tensor::scalar(0.0);
  std::size_t samples = 0;
  for (const TaskBatch& tb : batch.tasks) {
    if (tb.outer_rollouts.size() != tb.outer_advantages.size())
      throw std::invalid_argument("outer_loss_on_batch: misaligned advantages");
    ParamSet theta = adapted_params_on_batch(policy, log_alpha, cfg, tb);
    for (std::size_t k = 0; k < tb.outer_rollouts.size(); ++k) {
      const Rollout& r = tb.outer_rollouts[k];
      ad::DiagonalGaussian dist = act_distribution(theta, r.goal);
      Tensor z = Tensor::constant({2}, {r.action[0], r.action[1]});
      Tensor logp = ad::gaussian_log_density(dist, z);
      Tensor ratio = ad::exp(ad::add_scalar(logp, -r.log_density));
      Tensor clipped = ad::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
      const double a = tb.outer_advantages[k];
      acc = ad::add(acc, ad::minimum(ad::mul_scalar(ratio, a), ad::mul_scalar(clipped, a)));
      ++samples;
    }
  }
  return ad::mul_scalar(acc, -1.0 / static_cast<double>(samples));
}

MetaTrainState make_meta_train_state(const MetaConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng init_rng = root.child(0x1);
  ParamSet policy = make_policy(init_rng, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);
  ad::Adam policy_opt(policy, cfg.outer_lr);
  ad::Adam alpha_opt(alpha.params, cfg.outer_lr);
  return MetaTrainState{std::move(policy), std::move(alpha), std::move(policy_opt),
                        std::move(alpha_opt), root.child(0x2)};
}

IterationDiagnostics meta_iteration(MetaTrainState& state, const VaeModel& vae,
                                    const MetaConfig& cfg, const Task* fixed_task) {
  MetaBatch batch =
      collect_meta_batch(state.policy, vae, cfg, state.alpha.value(), state.rng, fixed_task);

  IterationDiagnostics diag;
  double pre = 0.0, post = 0.0;
  for (const TaskBatch& tb : batch.tasks) {
    post += stats::mean(rewards_of(tb.outer_rollouts));
    pre += tb.inner_rollouts.empty() ? stats::mean(rewards_of(tb.outer_rollouts))
                                     : stats::mean(rewards_of(tb.inner_rollouts.front()));
  }
  diag.pre_adapt_reward = pre / static_cast<double>(batch.tasks.size());
  diag.post_adapt_reward = post / static_cast<double>(batch.tasks.size());

  for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    Tensor loss = outer_loss_on_batch(state.policy, state.alpha.log_tensor(), cfg, batch);
    ad::Gradients grads = ad::backward(loss);
    state.policy_opt.step(state.policy, gradients_as_params(state.policy, grads));
    state.alpha_opt.step(state.alpha.params, gradients_as_params(state.alpha.params, grads));
    diag.loss = loss.value();
  }
  diag.alpha = state.alpha.value();
  return diag;
}

namespace {

TrainResult train_loop(const MetaConfig& cfg, const VaeModel& vae, const Task* fixed_task,
                       const TrainHook& hook) {
  MetaTrainState state = make_meta_train_state(cfg);
  TrainResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    // The iteration's rewards are measured under the pre-update snapshot, so
    // that snapshot is what a best-so-far checkpoint has to keep.
    ParamSet snapshot = state.policy.detach().clone_parameters();
    const double snapshot_alpha = state.alpha.value();
    IterationDiagnostics diag = meta_iteration(state, vae, cfg, fixed_task);
    TrainCurveRow row{it, diag.pre_adapt_reward, diag.post_adapt_reward, diag.alpha,
                      diag.loss};
    result.curve.push_back(row);
    if (hook) hook(row);
    if (diag.post_adapt_reward > best) {
      best = diag.post_adapt_reward;
      result.best_policy = std::move(snapshot);
      result.best_alpha = snapshot_alpha;
      result.best_iteration = it;
    }
  }
  result.final_policy = state.policy.detach().clone_parameters();
  result.final_alpha = state.alpha.value();
  return result;
}

// Same episode budget per iteration as the adaptive run: every inner step's
// rollouts plus the scored ones.
MetaConfig flat_config(const MetaConfig& cfg) {
  MetaConfig flat = cfg;
  flat.tasks_per_batch = cfg.tasks_per_batch * (cfg.adapt_steps + 1);
  flat.adapt_steps = 0;
  return flat;
}

}  // namespace

TrainResult train_meta(const MetaConfig& cfg, const VaeModel& vae, const TrainHook& hook) {
  cfg.validate();
  return train_loop(cfg, vae, nullptr, hook);
}

TrainResult train_baseline(const MetaConfig& cfg, const VaeModel& vae, const TrainHook& hook) {
  cfg.validate();
  return train_loop(flat_config(cfg), vae, nullptr, hook);
}

TrainResult train_oracle(const Task& task, const MetaConfig& cfg, const VaeModel& vae,
                         const TrainHook& hook) {
  cfg.validate();
  return train_loop(flat_config(cfg), vae, &task, hook);
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_training_curve_csv(const std::string& path,
                             const std::vector<TrainCurveRow>& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_training_curve_csv: cannot open " + path);
  os << "iteration,pre_adapt_reward,post_adapt_reward,alpha,loss\n";
  for (const TrainCurveRow& row : curve) {
    os << row.iteration << ',' << fmt17(row.pre_adapt_reward) << ','
       << fmt17(row.post_adapt_reward) << ',' << fmt17(row.alpha) << ','
       << fmt17(row.loss) << '\n';
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  if (ckpt.kind != "meta" && ckpt.kind != "baseline" && ckpt.kind != "oracle")
    throw std::invalid_argument("save_checkpoint: unknown kind " + ckpt.kind);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os << "metapuck-checkpoint 1\n";
  os << "kind " << ckpt.kind << '\n';
  os << "alpha " << fmt17(ckpt.alpha) << '\n';
  const MetaConfig& c = ckpt.config;
  os << "tasks_per_batch " << c.tasks_per_batch << '\n';
  os << "rollouts_per_step " << c.rollouts_per_step << '\n';
  os << "adapt_steps " << c.adapt_steps << '\n';
  os << "alpha_init " << fmt17(c.alpha_init) << '\n';
  os << "clip_epsilon " << fmt17(c.clip_epsilon) << '\n';
  os << "ppo_epochs " << c.ppo_epochs << '\n';
  os << "outer_lr " << fmt17(c.outer_lr) << '\n';
  os << "iterations " << c.iterations << '\n';
  os << "policy_hidden " << c.policy_hidden << '\n';
  os << "first_order " << (c.first_order ? 1 : 0) << '\n';
  os << "seed " << c.seed << '\n';
  os << "params\n";
  ckpt.policy.save(os);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "metapuck-checkpoint" || version != 1)
    throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
  Checkpoint ckpt;
  std::string key;
  while (is >> key && key != "params") {
    if (key == "kind") is >> ckpt.kind;
    else if (key == "alpha") is >> ckpt.alpha;
    else if (key == "tasks_per_batch") is >> ckpt.config.tasks_per_batch;
    else if (key == "rollouts_per_step") is >> ckpt.config.rollouts_per_step;
    else if (key == "adapt_steps") is >> ckpt.config.adapt_steps;
    else if (key == "alpha_init") is >> ckpt.config.alpha_init;
    else if (key == "clip_epsilon") is >> ckpt.config.clip_epsilon;
    else if (key == "ppo_epochs") is >> ckpt.config.ppo_epochs;
    else if (key == "outer_lr") is >> ckpt.config.outer_lr;
    else if (key == "iterations") is >> ckpt.config.iterations;
    else if (key == "policy_hidden") is >> ckpt.config.policy_hidden;
    else if (key == "first_order") {
      int v = 0;
      is >> v;
      ckpt.config.first_order = v != 0;
    } else if (key == "seed") {
      is >> ckpt.config.seed;
    } else {
      throw std::runtime_error("load_checkpoint: unknown key " + key);
    }
  }
  if (key != "params") throw std::runtime_error("load_checkpoint: missing params block");
  ckpt.policy = ParamSet::load(is);
  if (ckpt.kind != "meta" && ckpt.kind != "baseline" && ckpt.kind != "oracle")
    throw std::runtime_error("load_checkpoint: unknown kind " + ckpt.kind);
  return ckpt;
}

}  // namespace metapuck
