#include "metapuck/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "metapuck/adaptation.hpp"
#include "metapuck/config.hpp"
#include "metapuck/csv.hpp"
#include "metapuck/experiment.hpp"
#include "metapuck/meta_trainer.hpp"
#include "metapuck/nn.hpp"
#include "metapuck/policy.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/stats.hpp"
#include "metapuck/svg_plot.hpp"
#include "metapuck/trajectory.hpp"
#include "metapuck/vae.hpp"

namespace metapuck {

namespace {

void require_artifact(const std::string& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw MissingArtifactError(what + " not found: " + path);
}

void ensure_parent_dir(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::uint64_t seed_of(const KeyValueConfig& cfg) { return cfg.get_uint("seed", 0); }

MetaConfig meta_config_from(const KeyValueConfig& cfg) {
  MetaConfig m;
  m.tasks_per_batch = cfg.get_uint("tasks_per_batch", m.tasks_per_batch);
  m.rollouts_per_step = cfg.get_uint("rollouts_per_step", m.rollouts_per_step);
  m.adapt_steps = cfg.get_uint("adapt_steps", m.adapt_steps);
  m.alpha_init = cfg.get_double("alpha_init", m.alpha_init);
  m.clip_epsilon = cfg.get_double("clip_epsilon", m.clip_epsilon);
  m.ppo_epochs = cfg.get_uint("ppo_epochs", m.ppo_epochs);
  m.outer_lr = cfg.get_double("outer_lr", m.outer_lr);
  m.iterations = cfg.get_uint("iterations", m.iterations);
  m.policy_hidden = cfg.get_uint("policy_hidden", m.policy_hidden);
  m.first_order = cfg.get_bool("first_order", m.first_order);
  m.seed = seed_of(cfg);
  return m;
}

ExperimentConfig experiment_config_from(const KeyValueConfig& cfg) {
  ExperimentConfig e;
  e.conditions = cfg.get_list("conditions", e.conditions);
  e.methods = cfg.get_list("methods", e.methods);
  e.repetitions = cfg.get_uint("repetitions", e.repetitions);
  e.eval_steps = cfg.get_uint("eval_steps", e.eval_steps);
  e.eval_episodes = cfg.get_uint("eval_episodes", e.eval_episodes);
  e.adapt_rollouts = cfg.get_uint("adapt_rollouts", e.adapt_rollouts);
  e.stability_goals = cfg.get_uint("stability_goals", e.stability_goals);
  e.stability_condition = cfg.get_string("stability_condition", e.stability_condition);
  e.seed = seed_of(cfg);
  e.vae_path = cfg.get_string("vae", e.vae_path);
  e.meta_checkpoint = cfg.get_string("meta_checkpoint", e.meta_checkpoint);
  e.baseline_checkpoint = cfg.get_string("baseline_checkpoint", e.baseline_checkpoint);
  e.oracle_checkpoint_pattern =
      cfg.get_string("oracle_checkpoint_pattern", e.oracle_checkpoint_pattern);
  e.output_dir = cfg.get_string("output_dir", e.output_dir);
  return e;
}

TrainHook progress_hook(const std::string& tag, std::size_t iterations) {
  const std::size_t every = std::max<std::size_t>(1, iterations / 20);
  return [tag, every, iterations](const TrainCurveRow& row) {
    if (row.iteration % every != 0 && row.iteration + 1 != iterations) return;
    std::printf("[%s] iter %zu/%zu  pre %.4f  post %.4f  alpha %.5f  loss %.5f\n",
                tag.c_str(), row.iteration + 1, iterations, row.pre_adapt_reward,
                row.post_adapt_reward, row.alpha, row.loss);
    std::fflush(stdout);
  };
}

// Persists a finished run: final + best checkpoints and the training curve.
void save_train_result(const TrainResult& result, const MetaConfig& mcfg,
                       const std::string& kind, const std::string& dir,
                       const std::string& prefix) {
  std::filesystem::create_directories(dir);
  save_checkpoint({kind, result.final_alpha, mcfg, result.final_policy},
                  dir + "/" + prefix + "_final.ckpt");
  save_checkpoint({kind, result.best_alpha, mcfg, result.best_policy},
                  dir + "/" + prefix + "_best.ckpt");
  save_training_curve_csv(dir + "/" + prefix + "_curve.csv", result.curve);
  std::printf("wrote %s/%s_{final,best}.ckpt and %s/%s_curve.csv (best iter %zu)\n",
              dir.c_str(), prefix.c_str(), dir.c_str(), prefix.c_str(),
              result.best_iteration);
}

int run_gen_data(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "count", "output"});
  const std::size_t count = cfg.get_uint("count", 7371);
  const std::string output = cfg.get_string("output", "artifacts/dataset.csv");
  Rng rng(seed_of(cfg));
  std::vector<Trajectory> dataset = generate_dataset(rng, count);
  ensure_parent_dir(output);
  save_dataset_csv(output, dataset);
  std::printf("wrote %zu trajectories to %s\n", dataset.size(), output.c_str());
  return 0;
}

int run_train_vae(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "dataset", "output", "curve_output", "hidden", "epochs",
                     "batch", "lr", "beta_start", "beta_end"});
  const std::string dataset_path = cfg.get_string("dataset", "artifacts/dataset.csv");
  const std::string output = cfg.get_string("output", "artifacts/vae.txt");
  const std::string curve_path =
      cfg.get_string("curve_output", "artifacts/vae_training.csv");
  VaeConfig vcfg;
  vcfg.hidden = cfg.get_uint("hidden", vcfg.hidden);
  vcfg.epochs = cfg.get_uint("epochs", vcfg.epochs);
  vcfg.batch = cfg.get_uint("batch", vcfg.batch);
  vcfg.lr = cfg.get_double("lr", vcfg.lr);
  vcfg.beta_start = cfg.get_double("beta_start", vcfg.beta_start);
  vcfg.beta_end = cfg.get_double("beta_end", vcfg.beta_end);

  require_artifact(dataset_path, "dataset");
  std::vector<Trajectory> dataset = load_dataset_csv(dataset_path);
  std::printf("training on %zu trajectories (%zu epochs)\n", dataset.size(),
              vcfg.epochs);

  csvio::Table curve;
  curve.metadata = {{"artifact_version", "1"},
                    {"seed", std::to_string(seed_of(cfg))},
                    {"dataset", dataset_path}};
  curve.header = {"epoch", "recon", "kl", "beta"};
  const std::size_t every = std::max<std::size_t>(1, vcfg.epochs / 10);
  Rng rng(seed_of(cfg));
  VaeModel model = train_vae(dataset, vcfg, rng,
                             [&](std::size_t epoch, double recon, double kl, double beta) {
                               curve.rows.push_back({std::to_string(epoch),
                                                     csvio::format_double(recon),
                                                     csvio::format_double(kl),
                                                     csvio::format_double(beta)});
                               if (epoch % every == 0 || epoch + 1 == vcfg.epochs)
                                 std::printf("[vae] epoch %zu/%zu  recon %.5f  kl %.5f  "
                                             "beta %.2e\n",
                                             epoch + 1, vcfg.epochs, recon, kl, beta);
                             });
  ensure_parent_dir(output);
  save_vae(model, output);
  ensure_parent_dir(curve_path);
  csvio::write_table(curve_path, curve);
  std::printf("wrote %s and %s\n", output.c_str(), curve_path.c_str());
  return 0;
}

int run_sweep_latent(const KeyValueConfig& cfg) {
  cfg.require_known(
      {"seed", "vae", "condition", "grid", "span", "output", "plot_output"});
  const std::string vae_path = cfg.get_string("vae", "artifacts/vae.txt");
  const std::string condition = cfg.get_string("condition", "isotropic_low");
  const std::size_t grid = cfg.get_uint("grid", 9);
  const double span = cfg.get_double("span", 2.0);
  const std::string output = cfg.get_string("output", "artifacts/latent_sweep.csv");
  const std::string plot_output =
      cfg.get_string("plot_output", "artifacts/latent_sweep.svg");
  if (grid < 2) throw std::invalid_argument("sweep-latent: grid must be >= 2");
  if (span <= 0.0) throw std::invalid_argument("sweep-latent: span must be > 0");

  require_artifact(vae_path, "trajectory generator");
  VaeModel model = load_vae(vae_path);
  const Task task = fixed_task(condition);

  std::vector<LatentAction> points;
  for (std::size_t i = 0; i < grid; ++i)
    for (std::size_t j = 0; j < grid; ++j)
      points.push_back({-span + 2.0 * span * double(i) / double(grid - 1),
                        -span + 2.0 * span * double(j) / double(grid - 1)});
  std::vector<SweepRow> rows = latent_sweep(model, task, points);

  csvio::Table table;
  table.metadata = {{"artifact_version", "1"},
                    {"seed", std::to_string(seed_of(cfg))},
                    {"condition", condition},
                    {"grid", std::to_string(grid)},
                    {"span", csvio::format_double(span)}};
  table.header = {"z0", "z1", "final_x", "final_y", "puck_reward_to_center"};
  for (const SweepRow& r : rows)
    table.rows.push_back({csvio::format_double(r.z0), csvio::format_double(r.z1),
                          csvio::format_double(r.final_x), csvio::format_double(r.final_y),
                          csvio::format_double(r.puck_reward_to_center)});
  ensure_parent_dir(output);
  csvio::write_table(output, table);
  ensure_parent_dir(plot_output);
  plot_artifact(output, plot_output);
  std::printf("swept %zu latent points on %s -> %s, %s\n", rows.size(),
              condition.c_str(), output.c_str(), plot_output.c_str());
  return 0;
}

int run_train(const KeyValueConfig& cfg, const std::string& kind) {
  cfg.require_known({"seed", "vae", "output_dir", "tasks_per_batch", "rollouts_per_step",
                     "adapt_steps", "alpha_init", "clip_epsilon", "ppo_epochs", "outer_lr",
                     "iterations", "policy_hidden", "first_order", "condition"});
  const std::string vae_path = cfg.get_string("vae", "artifacts/vae.txt");
  const std::string dir = cfg.get_string("output_dir", "artifacts");
  require_artifact(vae_path, "trajectory generator");
  const VaeModel vae = load_vae(vae_path);
  MetaConfig mcfg = meta_config_from(cfg);

  if (kind == "meta") {
    TrainResult r = train_meta(mcfg, vae, progress_hook("meta", mcfg.iterations));
    save_train_result(r, mcfg, "meta", dir, "meta");
    std::printf("final alpha %.6f\n", r.final_alpha);
  } else if (kind == "baseline") {
    TrainResult r = train_baseline(mcfg, vae, progress_hook("baseline", mcfg.iterations));
    save_train_result(r, mcfg, "baseline", dir, "baseline");
  } else {  // oracle
    std::vector<std::string> conditions = {cfg.get_string("condition", "")};
    if (conditions.front().empty()) conditions = fixed_task_names();
    for (const std::string& condition : conditions) {
      const Task task = fixed_task(condition);
      TrainResult r =
          train_oracle(task, mcfg, vae, progress_hook("oracle " + condition, mcfg.iterations));
      save_train_result(r, mcfg, "oracle", dir, "oracle_" + condition);
    }
  }
  return 0;
}

int run_adapt(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "conditions", "methods", "repetitions", "eval_steps",
                     "eval_episodes", "adapt_rollouts", "vae", "meta_checkpoint",
                     "baseline_checkpoint", "oracle_checkpoint_pattern", "output_dir"});
  ExperimentConfig ecfg = experiment_config_from(cfg);
  AdaptationExperimentResult result = run_adaptation_experiment(ecfg);
  std::printf("adaptation step size alpha = %.6f\n", result.alpha_used);
  for (const AdaptationCurve& curve : result.curves)
    std::printf("[%s/%s] step0 %.4f -> final %.4f\n", curve.condition.c_str(),
                curve.method.c_str(), curve.points.front().mean_reward,
                curve.points.back().mean_reward);
  for (const std::string& artifact : result.artifacts)
    std::printf("wrote %s\n", artifact.c_str());
  return 0;
}

int run_evaluate(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "checkpoint", "vae", "conditions", "eval_episodes",
                     "repetitions", "output"});
  const std::string ckpt_path = cfg.get_string("checkpoint", "artifacts/meta_final.ckpt");
  const std::string vae_path = cfg.get_string("vae", "artifacts/vae.txt");
  const std::string output = cfg.get_string("output", "artifacts/evaluate.csv");
  std::vector<std::string> conditions = cfg.get_list("conditions", fixed_task_names());
  const std::size_t episodes = cfg.get_uint("eval_episodes", 16);
  const std::size_t reps = cfg.get_uint("repetitions", 25);
  if (episodes < 1) throw std::invalid_argument("evaluate: eval_episodes must be >= 1");
  if (reps < 1) throw std::invalid_argument("evaluate: repetitions must be >= 1");

  require_artifact(vae_path, "trajectory generator");
  require_artifact(ckpt_path, "checkpoint");
  const VaeModel vae = load_vae(vae_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);

  csvio::Table table;
  table.metadata = {{"artifact_version", "1"},
                    {"seed", std::to_string(seed_of(cfg))},
                    {"checkpoint", ckpt_path},
                    {"checkpoint_kind", ckpt.kind}};
  table.header = {"condition", "repetition", "mean_reward"};
  for (const std::string& condition : conditions) {
    const Task task = fixed_task(condition);
    std::vector<double> per_rep;
    for (std::size_t r = 0; r < reps; ++r) {
      Rng rng = Rng(seed_of(cfg)).child(0xE7A1).child(csvio::fnv1a64(condition)).child(r + 1);
      per_rep.push_back(evaluate_policy(ckpt.policy, task, vae, episodes, rng).mean_reward);
      table.rows.push_back({condition, std::to_string(r),
                            csvio::format_double(per_rep.back())});
    }
    const double m = stats::mean(per_rep);
    std::printf("[%s] mean reward %.4f over %zu repetitions x %zu episodes\n",
                condition.c_str(), m, reps, episodes);
  }
  ensure_parent_dir(output);
  csvio::write_table(output, table);
  std::printf("wrote %s\n", output.c_str());
  return 0;
}

int run_stability(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "condition", "repetitions", "eval_steps", "adapt_rollouts",
                     "stability_goals", "vae", "meta_checkpoint", "baseline_checkpoint",
                     "output_dir"});
  ExperimentConfig ecfg = experiment_config_from(cfg);
  if (cfg.has("condition")) ecfg.stability_condition = cfg.get_string("condition");
  StabilityReport report = run_latent_stability(ecfg);
  for (const StabilityMethodTrace& mt : report.methods)
    std::printf("[%s] spread step0 %.3e  step%zu %.3e\n", mt.method.c_str(),
                mt.spread.front(), mt.spread.size() - 1, mt.spread.back());
  for (const std::string& artifact : report.artifacts)
    std::printf("wrote %s\n", artifact.c_str());
  return 0;
}

int run_plot(const KeyValueConfig& cfg) {
  cfg.require_known({"seed", "input", "output"});
  const std::string input = cfg.get_string("input");
  std::string output = cfg.get_string("output", "");
  if (output.empty()) {
    output = input;
    if (auto dot = output.rfind('.'); dot != std::string::npos) output.resize(dot);
    output += ".svg";
  }
  ensure_parent_dir(output);
  for (const std::string& file : plot_artifact(input, output))
    std::printf("wrote %s\n", file.c_str());
  return 0;
}

// ---- verify: self-contained property checks, no artifacts required ----

void check_stopping_distance() {
  for (double v0 : {0.8, 1.6, 2.8}) {
    for (double mu : {0.15, 0.4, 0.8}) {
      Task t;
      t.mu_x = t.mu_y = mu;
      t.mu_torsional = t.mu_rot_x = t.mu_rot_y = 0.0;
      t.start_offset = {0.0, 0.0};
      PuckState s;
      s.vx = v0;
      const double got = simulate_slide(t, s).x;
      const double want = v0 * v0 / (2.0 * mu * sim::kGravity);
      if (std::abs(got - want) / want >= 0.01) {
        std::ostringstream msg;
        msg << "v0=" << v0 << " mu=" << mu << " got " << got << " want " << want;
        throw std::runtime_error(msg.str());
      }
    }
  }
}

void check_energy_dissipation(std::uint64_t seed) {
  Rng rng = Rng(seed).child(0xE6);
  for (int trial = 0; trial < 20; ++trial) {
    Task task = sample_task(rng);
    task.start_offset = {0.0, 0.0};
    PuckState s;
    const double ang = rng.uniform(0.0, 6.283185307179586);
    const double v0 = rng.uniform(0.5, 4.0);
    s.vx = v0 * std::cos(ang);
    s.vy = v0 * std::sin(ang);
    s.omega = rng.uniform(-30.0, 30.0);
    std::vector<TraceRow> trace;
    simulate_slide(task, s, 0.0, &trace);
    double prev = s.kinetic_energy(task.mass);
    for (const TraceRow& row : trace) {
      const double ke = PuckState{row.x, row.y, row.vx, row.vy, row.omega}
                            .kinetic_energy(task.mass);
      if (ke > prev + 1e-12)
        throw std::runtime_error("kinetic energy increased during free slide");
      prev = ke;
    }
  }
}

void check_gradients(std::uint64_t seed) {
  ad::MlpSpec spec{{2, 4, 1}, "m"};
  ad::ParamSet params;
  Rng rng = Rng(seed).child(0xAD);
  ad::init_mlp(params, spec, rng);
  const ad::Tensor x = ad::Tensor::constant({2}, {0.3, -0.7});
  auto loss_fn = [&]() {
    ad::Tensor out = ad::forward_mlp(params, spec, x);
    return ad::sum(ad::mul(out, out));
  };
  const ad::Gradients grads = ad::backward(loss_fn());
  const double h = 1e-5;
  for (ad::ParamSet::Entry& entry : params.entries_mut()) {
    const ad::Tensor analytic = grads.grad(entry.tensor);
    for (std::size_t i = 0; i < entry.tensor.values().size(); ++i) {
      const double v0 = entry.tensor.values()[i];
      entry.tensor.values_mut()[i] = v0 + h;
      const double up = loss_fn().value();
      entry.tensor.values_mut()[i] = v0 - h;
      const double dn = loss_fn().value();
      entry.tensor.values_mut()[i] = v0;
      const double fd = (up - dn) / (2.0 * h);
      const double a = analytic.values()[i];
      const double rel =
          std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      if (rel >= 1e-4) {
        std::ostringstream msg;
        msg << entry.name << "[" << i << "] analytic " << a << " fd " << fd;
        throw std::runtime_error(msg.str());
      }
    }
  }
}

void check_reward_normalization() {
  const std::vector<double> normalized = normalize_rewards({1.0, 2.0, 3.0, 4.0, 5.0});
  double m = 0.0;
  for (double v : normalized) m += v;
  m /= double(normalized.size());
  double var = 0.0;
  for (double v : normalized) var += (v - m) * (v - m);
  var /= double(normalized.size());
  if (std::abs(m) >= 1e-12 || std::abs(std::sqrt(var) - 1.0) >= 1e-12)
    throw std::runtime_error("normalized batch is not zero-mean unit-std");
  for (double v : normalize_rewards({2.5, 2.5, 2.5, 2.5}))
    if (v != 0.0) throw std::runtime_error("degenerate batch did not map to zeros");
}

// An untrained generator is enough for the two policy-level contracts below;
// they are statements about the update rule, not about strike quality.
VaeModel scratch_vae(std::uint64_t seed) {
  VaeConfig vcfg;
  vcfg.hidden = 8;
  Rng rng = Rng(seed).child(0x5A);
  return make_vae(vcfg, rng);
}

void check_alpha_zero_identity(std::uint64_t seed) {
  Rng rng = Rng(seed).child(0xA0);
  ad::ParamSet policy = make_policy(rng, 8);
  const VaeModel vae = scratch_vae(seed);
  const Task task = fixed_task("isotropic_low");
  Rng arng = Rng(seed).child(0xA1);
  AdaptationTrace trace = adapt(policy, task, vae, 0.0, 4, 2, arng);
  const std::vector<double> before = trace.snapshots.front().flatten();
  for (const ad::ParamSet& snap : trace.snapshots)
    if (snap.flatten() != before)
      throw std::runtime_error("alpha=0 adaptation changed the policy");
}

void check_rollout_reproducibility(std::uint64_t seed) {
  Rng rng = Rng(seed).child(0xB0);
  ad::ParamSet policy = make_policy(rng, 8);
  const VaeModel vae = scratch_vae(seed);
  const Task task = fixed_task("isotropic_medium");
  Rng r1 = Rng(seed).child(0xB1);
  Rng r2 = Rng(seed).child(0xB1);
  const std::vector<Rollout> a = collect_rollouts(policy, task, vae, 6, r1);
  const std::vector<Rollout> b = collect_rollouts(policy, task, vae, 6, r2);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].reward != b[i].reward || a[i].log_density != b[i].log_density ||
        a[i].action != b[i].action)
      throw std::runtime_error("same seed produced different rollouts");
}

int run_verify(const KeyValueConfig& cfg) {
  cfg.require_known({"seed"});
  const std::uint64_t seed = seed_of(cfg);
  struct Check {
    const char* name;
    std::function<void()> fn;
  };
  const std::vector<Check> checks = {
      {"stopping distance matches v0^2/(2 mu g) within 1%", check_stopping_distance},
      {"kinetic energy never increases while sliding",
       [seed] { check_energy_dissipation(seed); }},
      {"analytic gradients match central differences", [seed] { check_gradients(seed); }},
      {"reward normalization is exact", check_reward_normalization},
      {"alpha=0 adaptation is the identity", [seed] { check_alpha_zero_identity(seed); }},
      {"rollout collection is bit-reproducible",
       [seed] { check_rollout_reproducibility(seed); }},
  };
  bool ok = true;
  for (const Check& check : checks) {
    try {
      check.fn();
      std::printf("[ok]   %s\n", check.name);
    } catch (const std::exception& e) {
      std::printf("[FAIL] %s: %s\n", check.name, e.what());
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Sim-to-real striking: data generation, training and evaluation"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
    std::function<int(const KeyValueConfig&)> run;
  };
  const std::vector<SubSpec> specs = {
      {"gen-data", "Generate the strike-trajectory dataset", run_gen_data},
      {"train-vae", "Train the trajectory generator", run_train_vae},
      {"sweep-latent", "Strike a latent grid and record outcomes", run_sweep_latent},
      {"train-meta", "Meta-train the adaptive policy",
       [](const KeyValueConfig& c) { return run_train(c, "meta"); }},
      {"train-baseline", "Train the domain-randomization baseline",
       [](const KeyValueConfig& c) { return run_train(c, "baseline"); }},
      {"train-oracle", "Train per-condition oracle policies",
       [](const KeyValueConfig& c) { return run_train(c, "oracle"); }},
      {"adapt", "Run the adaptation comparison across conditions", run_adapt},
      {"evaluate", "Evaluate one checkpoint without adaptation", run_evaluate},
      {"stability", "Measure latent-action spread across repeated adaptations",
       run_stability},
      {"plot", "Render a CSV artifact to SVG", run_plot},
      {"verify", "Run the self-contained property-check suite", run_verify},
  };

  struct SubState {
    CLI::App* cmd = nullptr;
    std::string config_path;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    std::string condition;
    std::int64_t steps = -1;
    std::int64_t reps = -1;
    std::string input, output, checkpoint;
    const SubSpec* spec = nullptr;
  };
  std::vector<SubState> states(specs.size());

  for (std::size_t i = 0; i < specs.size(); ++i) {
    SubState& st = states[i];
    st.spec = &specs[i];
    st.cmd = app.add_subcommand(specs[i].name, specs[i].help);
    st.cmd->add_option("--config", st.config_path, "Key-value config file");
    st.seed_opt = st.cmd->add_option("--seed", st.seed, "Random seed (overrides config)");
    const std::string name = specs[i].name;
    if (name == "train-oracle" || name == "sweep-latent" || name == "stability" ||
        name == "evaluate")
      st.cmd->add_option("--condition", st.condition, "Dynamics condition name");
    if (name == "adapt") {
      st.cmd->add_option("--condition", st.condition,
                         "Restrict to one dynamics condition");
      st.cmd->add_option("--steps", st.steps, "Adaptation steps per repetition");
      st.cmd->add_option("--reps", st.reps, "Number of repetitions");
    }
    if (name == "plot") {
      st.cmd->add_option("--input", st.input, "CSV artifact to render");
      st.cmd->add_option("--output", st.output, "Output SVG path");
    }
    if (name == "evaluate")
      st.cmd->add_option("--checkpoint", st.checkpoint, "Checkpoint to evaluate");
  }

  try {
    app.parse(argc, argv);
    for (const SubState& st : states) {
      if (!st.cmd->parsed()) continue;
      KeyValueConfig cfg = st.config_path.empty()
                               ? KeyValueConfig{}
                               : KeyValueConfig::parse_file(st.config_path);
      if (st.seed_opt->count() > 0) cfg.set("seed", std::to_string(st.seed));
      const std::string name = st.spec->name;
      if (!st.condition.empty())
        cfg.set(name == "adapt" || name == "evaluate" ? "conditions" : "condition",
                st.condition);
      if (st.steps >= 0) cfg.set("eval_steps", std::to_string(st.steps));
      if (st.reps > 0) cfg.set("repetitions", std::to_string(st.reps));
      if (!st.input.empty()) cfg.set("input", st.input);
      if (!st.output.empty()) cfg.set("output", st.output);
      if (!st.checkpoint.empty()) cfg.set("checkpoint", st.checkpoint);
      return st.spec->run(cfg);
    }
    return 0;  // unreachable: require_subcommand(1)
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::fputs(app.help().c_str(), stderr);
    return 1;
  } catch (const MissingArtifactError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace metapuck
