#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "metapuck/adaptation.hpp"
#include "metapuck/meta_trainer.hpp"
#include "metapuck/param_set.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/vae.hpp"

namespace metapuck {

// Evaluation and comparison protocol configuration.
struct ExperimentConfig {
  std::vector<std::string> conditions;           // empty = every named condition
  std::vector<std::string> methods = {"meta", "baseline", "oracle"};
  std::size_t repetitions = 25;                  // R
  std::size_t eval_steps = 10;                   // adaptation steps per repetition
  std::size_t eval_episodes = 16;                // mean-action episodes per evaluation
  std::size_t adapt_rollouts = 16;               // exploration episodes per update
  std::size_t stability_goals = 1000;            // fixed goal set size
  std::string stability_condition = "isotropic_medium";
  std::uint64_t seed = 0;
  std::string vae_path = "artifacts/vae.txt";
  std::string meta_checkpoint = "artifacts/meta_final.ckpt";
  std::string baseline_checkpoint = "artifacts/baseline_final.ckpt";
  // "{condition}" is replaced by the condition name.
  std::string oracle_checkpoint_pattern = "artifacts/oracle_{condition}_final.ckpt";
  std::string output_dir = "artifacts";

  void validate() const;
  std::vector<std::string> resolved_conditions() const;
  std::string oracle_checkpoint(const std::string& condition) const;
  // Stable fingerprint of every field above (artifact metadata).
  std::uint64_t fingerprint() const;
};

// One deterministic evaluation episode (mean action, no exploration noise).
struct EvalEpisode {
  Goal goal;
  LatentAction z{};
  double reward = 0.0;
  bool mean_action = true;  // instrumentation: evaluation never samples
};

struct EvalResult {
  double mean_reward = 0.0;
  std::vector<EvalEpisode> episodes;
};

// E episodes with the policy mean on goals drawn from `rng`; the caller keys
// that rng so evaluation stays independent of adaptation noise.
EvalResult evaluate_policy(const ad::ParamSet& policy, const Task& task,
                           const VaeModel& vae, std::size_t episodes, Rng& rng);

// Deterministic per-(condition, repetition, step) evaluation stream shared by
// every method, and per-(condition, method, repetition) adaptation stream.
Rng eval_stream(const ExperimentConfig& cfg, const std::string& condition,
                std::size_t repetition, std::size_t step);
Rng adapt_stream(const ExperimentConfig& cfg, const std::string& condition,
                 const std::string& method, std::size_t repetition);

struct CurvePoint {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double std_error = 0.0;            // sample std across repetitions / sqrt(R)
  std::vector<double> per_rep;       // repetition-level mean rewards
};

struct AdaptationCurve {
  std::string condition, method;
  std::vector<CurvePoint> points;  // eval_steps + 1, step 0 first
};

struct AdaptationExperimentResult {
  std::vector<AdaptationCurve> curves;    // condition-major, then method
  double alpha_used = 0.0;                // inner step size during evaluation
  std::vector<std::string> artifacts;     // files written under output_dir
};

// The full comparison protocol: per condition, method and repetition,
// evaluate at step 0 then alternate one exploration update with one
// mean-action evaluation. Oracle policies are evaluated without adaptation
// (their condition is already the training condition); meta and baseline
// adapt with the step size learned by the meta run. Emits raw + summary CSVs,
// per-condition plots and a repetition-0 rollout trace per curve.
AdaptationExperimentResult run_adaptation_experiment(const ExperimentConfig& cfg);

struct StabilityMethodTrace {
  std::string method;
  std::vector<double> spread;  // per step: mean over goals of the trace of
                               // the covariance of per-repetition mean actions
  // [step][repetition][goal] -> policy-mean latent action
  std::vector<std::vector<std::vector<LatentAction>>> actions;
};

struct StabilityReport {
  std::string condition;
  std::vector<Goal> goals;
  std::vector<StabilityMethodTrace> methods;  // meta, baseline
  std::vector<std::string> artifacts;
};

// Latent-consistency study: a fixed goal set, repeated adaptation runs, and
// the spread of the policy-mean latent actions across repetitions per step.
StabilityReport run_latent_stability(const ExperimentConfig& cfg);

// Renders a CSV artifact produced by this project into SVG files; the CSV
// kind is detected from its header. `output` may contain "{condition}" when
// the CSV spans several conditions. Returns the files written.
std::vector<std::string> plot_artifact(const std::string& csv_path,
                                       const std::string& output);

}  // namespace metapuck
