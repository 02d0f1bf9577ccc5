#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metapuck/adam.hpp"
#include "metapuck/adaptation.hpp"
#include "metapuck/param_set.hpp"
#include "metapuck/policy.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/vae.hpp"

namespace metapuck {

// Outer-loop training configuration shared by the meta, domain-randomization
// and per-condition trainers.
struct MetaConfig {
  std::size_t tasks_per_batch = 10;    // dynamics conditions per outer batch
  std::size_t rollouts_per_step = 16;  // episodes per inner step and per evaluation
  std::size_t adapt_steps = 3;         // inner gradient steps between collection and scoring
  double alpha_init = 0.01;            // initial inner step size (learned from here)
  double clip_epsilon = 0.2;           // surrogate ratio clip half-width
  std::size_t ppo_epochs = 4;          // optimizer steps per collected batch
  double outer_lr = 3e-4;
  std::size_t iterations = 300;
  std::size_t policy_hidden = kPolicyHidden;
  bool first_order = false;  // detach inner gradients (cheaper, biased)
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument on a bad field
};

// Learnable inner step size, log-parameterized so alpha stays positive.
struct LearnedAlpha {
  ad::ParamSet params;  // single grad-tracked entry "log_alpha", shape {1}

  const ad::Tensor& log_tensor() const { return params.get("log_alpha"); }
  double value() const;
};
LearnedAlpha make_learned_alpha(double alpha_init);

// Everything one task contributes to an outer batch: the rollouts behind each
// inner update (with their normalized rewards) and the post-adaptation
// rollouts, whose stored log-densities stay frozen as the old policy.
struct TaskBatch {
  Task task;
  std::vector<std::vector<Rollout>> inner_rollouts;   // adapt_steps x K
  std::vector<std::vector<double>> inner_advantages;  // adapt_steps x K
  std::vector<Rollout> outer_rollouts;                // K
  std::vector<double> outer_advantages;               // K, normalized within the task
};

struct MetaBatch {
  std::vector<TaskBatch> tasks;
};

// Samples tasks_per_batch conditions (or replicates *fixed_task), runs the
// value-only inner updates with the given alpha and records every rollout.
// Pure data: the differentiable graph is rebuilt from it each optimizer epoch.
MetaBatch collect_meta_batch(const ad::ParamSet& policy, const VaeModel& vae,
                             const MetaConfig& cfg, double alpha, Rng& rng,
                             const Task* fixed_task = nullptr);

// Adapted parameters for one task: adapt_steps gradient steps on the stored
// rollouts starting from `policy`, step size exp(log_alpha), every update in
// the graph. With first_order the inner gradients are detached; the values
// are unchanged but outer gradients reduce to the first-order approximation.
ad::ParamSet adapted_params_on_batch(const ad::ParamSet& policy,
                                     const ad::Tensor& log_alpha,
                                     const MetaConfig& cfg, const TaskBatch& batch);

// Clipped-surrogate loss over every post-adaptation sample in the batch,
// differentiable w.r.t. the policy leaves and log_alpha. Advantages are the
// stored per-task normalized rewards; there is no critic because episodes
// are single-step.
ad::Tensor outer_loss_on_batch(const ad::ParamSet& policy, const ad::Tensor& log_alpha,
                               const MetaConfig& cfg, const MetaBatch& batch);

struct IterationDiagnostics {
  double pre_adapt_reward = 0.0;   // mean reward before any inner update
  double post_adapt_reward = 0.0;  // mean reward of the post-adaptation rollouts
  double alpha = 0.0;              // inner step size after this iteration
  double loss = 0.0;               // outer loss at the last optimizer epoch
};

// Mutable training state. Two Adam instances with identical hyperparameters
// stepping in lockstep are exactly one joint optimizer (the update is
// elementwise), so the policy and alpha can keep separate checkpoints.
struct MetaTrainState {
  ad::ParamSet policy;
  LearnedAlpha alpha;
  ad::Adam policy_opt;
  ad::Adam alpha_opt;
  Rng rng;
};
MetaTrainState make_meta_train_state(const MetaConfig& cfg);

// One outer iteration: collect a batch once, then per epoch rebuild the
// differentiable graph from the stored data, backprop the clipped surrogate
// through every inner update, and take one Adam step on (policy, log_alpha).
IterationDiagnostics meta_iteration(MetaTrainState& state, const VaeModel& vae,
                                    const MetaConfig& cfg,
                                    const Task* fixed_task = nullptr);

struct TrainCurveRow {
  std::size_t iteration = 0;
  double pre_adapt_reward = 0.0;
  double post_adapt_reward = 0.0;
  double alpha = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  ad::ParamSet final_policy;
  ad::ParamSet best_policy;  // snapshot with the best post-adaptation reward
  double final_alpha = 0.0;
  double best_alpha = 0.0;
  std::size_t best_iteration = 0;
  std::vector<TrainCurveRow> curve;  // one row per iteration
};

using TrainHook = std::function<void(const TrainCurveRow&)>;

// Adaptation-aware training: inner updates during collection, outer updates
// through them.
TrainResult train_meta(const MetaConfig& cfg, const VaeModel& vae,
                       const TrainHook& hook = {});

// Domain-randomization baseline: same architecture and iteration budget, no
// inner updates. Rollout groups are widened by (adapt_steps + 1) so both
// trainers consume the same number of episodes per iteration.
TrainResult train_baseline(const MetaConfig& cfg, const VaeModel& vae,
                           const TrainHook& hook = {});

// Single-condition upper bound: the baseline trainer pinned to one task.
TrainResult train_oracle(const Task& task, const MetaConfig& cfg, const VaeModel& vae,
                         const TrainHook& hook = {});

void save_training_curve_csv(const std::string& path,
                             const std::vector<TrainCurveRow>& curve);

// Policy checkpoint plus the evaluation-time step size and the config that
// produced it.
struct Checkpoint {
  std::string kind;  // "meta" | "baseline" | "oracle"
  double alpha = 0.0;
  MetaConfig config;
  ad::ParamSet policy;
};
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace metapuck
