#include "metapuck/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <utility>

#include "metapuck/config.hpp"
#include "metapuck/csv.hpp"
#include "metapuck/policy.hpp"
#include "metapuck/stats.hpp"
#include "metapuck/svg_plot.hpp"

namespace metapuck {

using ad::ParamSet;

namespace {

const char* kMetaColor = "#1f77b4";
const char* kBaselineColor = "#d62728";
const char* kOracleColor = "#2ca02c";

std::string method_color(const std::string& method) {
  if (method == "meta") return kMetaColor;
  if (method == "baseline") return kBaselineColor;
  if (method == "oracle") return kOracleColor;
  return "#777777";
}

void require_file(const std::string& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw MissingArtifactError(what + " not found: " + path);
}

void create_parent_dir(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

// Replaces "{key}"; without the placeholder the value lands before the
// file extension so multi-valued artifacts never overwrite each other.
std::string instantiate(const std::string& pattern, const std::string& key,
                        const std::string& value) {
  const std::string token = "{" + key + "}";
  if (auto pos = pattern.find(token); pos != std::string::npos) {
    std::string out = pattern;
    out.replace(pos, token.size(), value);
    return out;
  }
  auto slash = pattern.rfind('/');
  auto dot = pattern.rfind('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return pattern + "_" + value;
  return pattern.substr(0, dot) + "_" + value + pattern.substr(dot);
}

double sample_std_error(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = stats::mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(xs.size() - 1)) / std::sqrt(double(xs.size()));
}

std::vector<std::pair<std::string, std::string>> base_metadata(const ExperimentConfig& cfg) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(cfg.fingerprint()));
  return {{"artifact_version", "1"},
          {"tool", "metapuck"},
          {"seed", std::to_string(cfg.seed)},
          {"config_hash", hash}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw std::invalid_argument("ExperimentConfig: repetitions must be >= 1");
  if (eval_episodes < 1)
    throw std::invalid_argument("ExperimentConfig: eval_episodes must be >= 1");
  if (adapt_rollouts < 2)
    throw std::invalid_argument("ExperimentConfig: adapt_rollouts must be >= 2");
  if (stability_goals < 1)
    throw std::invalid_argument("ExperimentConfig: stability_goals must be >= 1");
  if (methods.empty()) throw std::invalid_argument("ExperimentConfig: no methods selected");
  for (const std::string& m : methods)
    if (m != "meta" && m != "baseline" && m != "oracle")
      throw std::invalid_argument("ExperimentConfig: unknown method '" + m + "'");
  for (const std::string& c : resolved_conditions()) fixed_task(c);  // throws on bad names
  fixed_task(stability_condition);
}

std::vector<std::string> ExperimentConfig::resolved_conditions() const {
  return conditions.empty() ? fixed_task_names() : conditions;
}

std::string ExperimentConfig::oracle_checkpoint(const std::string& condition) const {
  return instantiate(oracle_checkpoint_pattern, "condition", condition);
}

std::uint64_t ExperimentConfig::fingerprint() const {
  std::string text;
  for (const std::string& c : conditions) text += "condition=" + c + "\n";
  for (const std::string& m : methods) text += "method=" + m + "\n";
  text += "repetitions=" + std::to_string(repetitions) + "\n";
  text += "eval_steps=" + std::to_string(eval_steps) + "\n";
  text += "eval_episodes=" + std::to_string(eval_episodes) + "\n";
  text += "adapt_rollouts=" + std::to_string(adapt_rollouts) + "\n";
  text += "stability_goals=" + std::to_string(stability_goals) + "\n";
  text += "stability_condition=" + stability_condition + "\n";
  text += "seed=" + std::to_string(seed) + "\n";
  text += "vae_path=" + vae_path + "\n";
  text += "meta_checkpoint=" + meta_checkpoint + "\n";
  text += "baseline_checkpoint=" + baseline_checkpoint + "\n";
  text += "oracle_checkpoint_pattern=" + oracle_checkpoint_pattern + "\n";
  text += "output_dir=" + output_dir + "\n";
  return csvio::fnv1a64(text);
}

EvalResult evaluate_policy(const ParamSet& policy, const Task& task, const VaeModel& vae,
                           std::size_t episodes, Rng& rng) {
  if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
  EvalResult result;
  result.episodes.reserve(episodes);
  double total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    EvalEpisode ep;
    ep.goal = sample_goal(rng);
    ep.z = mean_action(policy, ep.goal);
    ep.mean_action = true;
    StrikeResult res = execute_strike(task, decode(vae, ep.z));
    ep.reward = reward(res.final_state, ep.goal);
    total += ep.reward;
    result.episodes.push_back(ep);
  }
  result.mean_reward = total / double(episodes);
  return result;
}

Rng eval_stream(const ExperimentConfig& cfg, const std::string& condition,
                std::size_t repetition, std::size_t step) {
  return Rng(cfg.seed)
      .child(0xE7A1)
      .child(csvio::fnv1a64(condition))
      .child(repetition + 1)
      .child(step + 1);
}

Rng adapt_stream(const ExperimentConfig& cfg, const std::string& condition,
                 const std::string& method, std::size_t repetition) {
  return Rng(cfg.seed)
      .child(0xADA7)
      .child(csvio::fnv1a64(condition))
      .child(csvio::fnv1a64(method))
      .child(repetition + 1);
}

namespace {

CurvePoint make_point(std::size_t step, std::vector<double> per_rep) {
  CurvePoint p;
  p.step = step;
  p.per_rep = std::move(per_rep);
  p.mean_reward = stats::mean(p.per_rep);
  p.std_error = sample_std_error(p.per_rep);
  return p;
}

}  // namespace

AdaptationExperimentResult run_adaptation_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  require_file(cfg.vae_path, "trajectory generator");
  const VaeModel vae = load_vae(cfg.vae_path);

  const bool wants_baseline =
      std::count(cfg.methods.begin(), cfg.methods.end(), "baseline") != 0;

  // The learned step size always comes from the meta run, for the baseline's
  // adaptation too; the meta checkpoint is therefore always required.
  require_file(cfg.meta_checkpoint, "meta checkpoint");
  Checkpoint meta = load_checkpoint(cfg.meta_checkpoint);
  Checkpoint baseline;
  if (wants_baseline) {
    require_file(cfg.baseline_checkpoint, "baseline checkpoint");
    baseline = load_checkpoint(cfg.baseline_checkpoint);
    ParamSet::check_congruent(meta.policy, baseline.policy,
                              "meta vs baseline checkpoint");
  }

  AdaptationExperimentResult result;
  result.alpha_used = meta.alpha;
  std::filesystem::create_directories(cfg.output_dir);

  for (const std::string& condition : cfg.resolved_conditions()) {
    const Task task = fixed_task(condition);
    for (const std::string& method : cfg.methods) {
      AdaptationCurve curve;
      curve.condition = condition;
      curve.method = method;
      // per_step[s][r] = repetition r's mean evaluation reward at step s
      std::vector<std::vector<double>> per_step(cfg.eval_steps + 1);

      if (method == "oracle") {
        const std::string path = cfg.oracle_checkpoint(condition);
        require_file(path, "oracle checkpoint");
        Checkpoint oracle = load_checkpoint(path);
        // The oracle was trained on this very condition, so it sets the
        // upper bound as-is; adapting it would only add estimation noise.
        for (std::size_t r = 0; r < cfg.repetitions; ++r)
          for (std::size_t s = 0; s <= cfg.eval_steps; ++s) {
            Rng rng = eval_stream(cfg, condition, r, s);
            per_step[s].push_back(
                evaluate_policy(oracle.policy, task, vae, cfg.eval_episodes, rng)
                    .mean_reward);
          }
      } else {
        const Checkpoint& start = method == "meta" ? meta : baseline;
        for (std::size_t r = 0; r < cfg.repetitions; ++r) {
          Rng arng = adapt_stream(cfg, condition, method, r);
          AdaptationTrace trace = adapt(start.policy, task, vae, meta.alpha,
                                        cfg.adapt_rollouts, cfg.eval_steps, arng);
          for (std::size_t s = 0; s <= cfg.eval_steps; ++s) {
            Rng erng = eval_stream(cfg, condition, r, s);
            per_step[s].push_back(
                evaluate_policy(trace.snapshots[s], task, vae, cfg.eval_episodes, erng)
                    .mean_reward);
          }
          if (r == 0) {
            const std::string stem =
                join_path(cfg.output_dir, "adaptation_trace_" + condition + "_" + method);
            save_adaptation_rollouts_csv(stem + "_rollouts.csv", trace);
            save_adaptation_summary_csv(stem + "_summary.csv", trace);
            result.artifacts.push_back(stem + "_rollouts.csv");
            result.artifacts.push_back(stem + "_summary.csv");
          }
        }
      }

      for (std::size_t s = 0; s <= cfg.eval_steps; ++s)
        curve.points.push_back(make_point(s, std::move(per_step[s])));
      result.curves.push_back(std::move(curve));
    }
  }

  // Raw per-repetition rows.
  csvio::Table raw;
  raw.metadata = base_metadata(cfg);
  raw.metadata.emplace_back("alpha_used", csvio::format_double(result.alpha_used));
  raw.header = {"condition", "method", "repetition", "step", "mean_reward"};
  for (const AdaptationCurve& curve : result.curves)
    for (const CurvePoint& p : curve.points)
      for (std::size_t r = 0; r < p.per_rep.size(); ++r)
        raw.rows.push_back({curve.condition, curve.method, std::to_string(r),
                            std::to_string(p.step), csvio::format_double(p.per_rep[r])});
  const std::string raw_path = join_path(cfg.output_dir, "adaptation_raw.csv");
  csvio::write_table(raw_path, raw);
  result.artifacts.push_back(raw_path);

  // Aggregated rows.
  csvio::Table summary;
  summary.metadata = raw.metadata;
  summary.metadata.emplace_back("std_error", "sample std across repetitions / sqrt(R)");
  summary.header = {"condition", "method", "step", "mean_reward", "std_error",
                    "repetitions"};
  for (const AdaptationCurve& curve : result.curves)
    for (const CurvePoint& p : curve.points)
      summary.rows.push_back({curve.condition, curve.method, std::to_string(p.step),
                              csvio::format_double(p.mean_reward),
                              csvio::format_double(p.std_error),
                              std::to_string(p.per_rep.size())});
  const std::string summary_path = join_path(cfg.output_dir, "adaptation_summary.csv");
  csvio::write_table(summary_path, summary);
  result.artifacts.push_back(summary_path);

  // One comparison plot per condition, 95% confidence bands.
  for (const std::string& condition : cfg.resolved_conditions()) {
    svg::LinePlot plot;
    plot.title = "Adaptation on " + condition;
    plot.x_label = "adaptation step";
    plot.y_label = "mean evaluation reward";
    for (const AdaptationCurve& curve : result.curves) {
      if (curve.condition != condition) continue;
      svg::LineSeries s;
      s.label = curve.method;
      s.color = method_color(curve.method);
      for (const CurvePoint& p : curve.points) {
        s.x.push_back(double(p.step));
        s.y.push_back(p.mean_reward);
        s.band.push_back(1.96 * p.std_error);
      }
      plot.series.push_back(std::move(s));
    }
    const std::string plot_path =
        join_path(cfg.output_dir, "adaptation_" + condition + ".svg");
    svg::write_line_plot(plot_path, plot);
    result.artifacts.push_back(plot_path);
  }
  return result;
}

namespace {

// Spread of one step: per goal, the trace of the covariance across
// repetitions of the recorded actions, averaged over goals. Computed on
// differences from the first repetition so identical points give exactly 0.
double spread_of_step(const std::vector<std::vector<LatentAction>>& reps) {
  const std::size_t n_reps = reps.size();
  const std::size_t n_goals = reps.empty() ? 0 : reps.front().size();
  if (n_reps == 0 || n_goals == 0) return 0.0;
  double total = 0.0;
  for (std::size_t g = 0; g < n_goals; ++g) {
    double mx = 0.0, my = 0.0;
    for (std::size_t r = 0; r < n_reps; ++r) {
      mx += reps[r][g][0] - reps[0][g][0];
      my += reps[r][g][1] - reps[0][g][1];
    }
    mx /= double(n_reps);
    my /= double(n_reps);
    double var = 0.0;
    for (std::size_t r = 0; r < n_reps; ++r) {
      const double dx = (reps[r][g][0] - reps[0][g][0]) - mx;
      const double dy = (reps[r][g][1] - reps[0][g][1]) - my;
      var += dx * dx + dy * dy;
    }
    total += var / double(n_reps);
  }
  return total / double(n_goals);
}

}  // namespace

StabilityReport run_latent_stability(const ExperimentConfig& cfg) {
  cfg.validate();
  require_file(cfg.vae_path, "trajectory generator");
  const VaeModel vae = load_vae(cfg.vae_path);
  require_file(cfg.meta_checkpoint, "meta checkpoint");
  Checkpoint meta = load_checkpoint(cfg.meta_checkpoint);
  require_file(cfg.baseline_checkpoint, "baseline checkpoint");
  Checkpoint baseline = load_checkpoint(cfg.baseline_checkpoint);

  StabilityReport report;
  report.condition = cfg.stability_condition;
  const Task task = fixed_task(cfg.stability_condition);

  Rng goal_rng = Rng(cfg.seed).child(0x60A1);
  report.goals.reserve(cfg.stability_goals);
  for (std::size_t g = 0; g < cfg.stability_goals; ++g)
    report.goals.push_back(sample_goal(goal_rng));

  for (const std::string& method : {std::string("meta"), std::string("baseline")}) {
    const Checkpoint& start = method == "meta" ? meta : baseline;
    StabilityMethodTrace mt;
    mt.method = method;
    mt.actions.assign(cfg.eval_steps + 1,
                      std::vector<std::vector<LatentAction>>(cfg.repetitions));
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
      Rng arng = adapt_stream(cfg, cfg.stability_condition, method, r);
      AdaptationTrace trace = adapt(start.policy, task, vae, meta.alpha,
                                    cfg.adapt_rollouts, cfg.eval_steps, arng);
      for (std::size_t s = 0; s <= cfg.eval_steps; ++s) {
        auto& row = mt.actions[s][r];
        row.reserve(report.goals.size());
        for (const Goal& goal : report.goals)
          row.push_back(mean_action(trace.snapshots[s], goal));
      }
    }
    for (std::size_t s = 0; s <= cfg.eval_steps; ++s)
      mt.spread.push_back(spread_of_step(mt.actions[s]));
    report.methods.push_back(std::move(mt));
  }

  std::filesystem::create_directories(cfg.output_dir);
  auto metadata = base_metadata(cfg);
  metadata.emplace_back("condition", report.condition);
  metadata.emplace_back(
      "spread_metric",
      "mean over goals of tr(cov across repetitions of policy-mean latent action)");

  csvio::Table spread;
  spread.metadata = metadata;
  spread.header = {"method", "step", "spread"};
  for (const StabilityMethodTrace& mt : report.methods)
    for (std::size_t s = 0; s < mt.spread.size(); ++s)
      spread.rows.push_back(
          {mt.method, std::to_string(s), csvio::format_double(mt.spread[s])});
  const std::string spread_path = join_path(cfg.output_dir, "stability_spread.csv");
  csvio::write_table(spread_path, spread);
  report.artifacts.push_back(spread_path);

  // Scatter rows for a plotting-friendly subset of the goal set.
  const std::size_t plot_goals = std::min<std::size_t>(40, report.goals.size());
  csvio::Table scatter;
  scatter.metadata = metadata;
  scatter.metadata.emplace_back("plotted_goals", std::to_string(plot_goals));
  scatter.header = {"method", "step", "repetition", "goal_index", "z0", "z1"};
  for (const StabilityMethodTrace& mt : report.methods)
    for (std::size_t s = 0; s < mt.actions.size(); ++s)
      for (std::size_t r = 0; r < mt.actions[s].size(); ++r)
        for (std::size_t g = 0; g < plot_goals; ++g)
          scatter.rows.push_back({mt.method, std::to_string(s), std::to_string(r),
                                  std::to_string(g),
                                  csvio::format_double(mt.actions[s][r][g][0]),
                                  csvio::format_double(mt.actions[s][r][g][1])});
  const std::string scatter_path = join_path(cfg.output_dir, "stability_scatter.csv");
  csvio::write_table(scatter_path, scatter);
  report.artifacts.push_back(scatter_path);

  // Spread curve plus one latent scatter per step.
  svg::LinePlot spread_plot;
  spread_plot.title = "Latent spread across repetitions (" + report.condition + ")";
  spread_plot.x_label = "adaptation step";
  spread_plot.y_label = "spread";
  for (const StabilityMethodTrace& mt : report.methods) {
    svg::LineSeries s;
    s.label = mt.method;
    s.color = method_color(mt.method);
    for (std::size_t i = 0; i < mt.spread.size(); ++i) {
      s.x.push_back(double(i));
      s.y.push_back(mt.spread[i]);
    }
    spread_plot.series.push_back(std::move(s));
  }
  const std::string spread_svg = join_path(cfg.output_dir, "stability_spread.svg");
  svg::write_line_plot(spread_svg, spread_plot);
  report.artifacts.push_back(spread_svg);

  for (std::size_t s = 0; s <= cfg.eval_steps; ++s) {
    svg::ScatterPlot plot;
    plot.title = "Policy-mean latent actions, step " + std::to_string(s);
    plot.x_label = "z0";
    plot.y_label = "z1";
    for (const StabilityMethodTrace& mt : report.methods) {
      svg::ScatterSeries series;
      series.label = mt.method;
      series.color = method_color(mt.method);
      for (std::size_t r = 0; r < mt.actions[s].size(); ++r)
        for (std::size_t g = 0; g < plot_goals; ++g)
          series.points.push_back({mt.actions[s][r][g][0], mt.actions[s][r][g][1]});
      plot.series.push_back(std::move(series));
    }
    const std::string path =
        join_path(cfg.output_dir, "stability_step" + std::to_string(s) + ".svg");
    svg::write_scatter_plot(path, plot);
    report.artifacts.push_back(path);
  }
  return report;
}

namespace {

bool header_is(const csvio::Table& t, const std::vector<std::string>& expected) {
  return t.header == expected;
}

std::vector<std::string> plot_adaptation_summary(const csvio::Table& t,
                                                 const std::string& output) {
  const std::size_t c_cond = t.column("condition"), c_method = t.column("method");
  const std::size_t c_step = t.column("step"), c_mean = t.column("mean_reward");
  const std::size_t c_err = t.column("std_error");
  std::vector<std::string> conditions;
  for (const auto& row : t.rows)
    if (std::find(conditions.begin(), conditions.end(), row[c_cond]) == conditions.end())
      conditions.push_back(row[c_cond]);
  std::vector<std::string> written;
  for (const std::string& condition : conditions) {
    svg::LinePlot plot;
    plot.title = "Adaptation on " + condition;
    plot.x_label = "adaptation step";
    plot.y_label = "mean evaluation reward";
    std::vector<std::string> methods;
    for (const auto& row : t.rows)
      if (row[c_cond] == condition &&
          std::find(methods.begin(), methods.end(), row[c_method]) == methods.end())
        methods.push_back(row[c_method]);
    for (const std::string& method : methods) {
      svg::LineSeries s;
      s.label = method;
      s.color = method_color(method);
      for (const auto& row : t.rows) {
        if (row[c_cond] != condition || row[c_method] != method) continue;
        s.x.push_back(csvio::parse_double(row[c_step]));
        s.y.push_back(csvio::parse_double(row[c_mean]));
        s.band.push_back(1.96 * csvio::parse_double(row[c_err]));
      }
      plot.series.push_back(std::move(s));
    }
    const bool has_token = output.find("{condition}") != std::string::npos;
    const std::string path = has_token || conditions.size() > 1
                                 ? instantiate(output, "condition", condition)
                                 : output;
    create_parent_dir(path);
    svg::write_line_plot(path, plot);
    written.push_back(path);
  }
  return written;
}

csvio::Table aggregate_raw(const csvio::Table& raw) {
  const std::size_t c_cond = raw.column("condition"), c_method = raw.column("method");
  const std::size_t c_step = raw.column("step"), c_mean = raw.column("mean_reward");
  // key order follows first appearance, which matches the writer's layout
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  auto group_of = [&](const std::string& key) -> std::vector<double>& {
    for (auto& [k, v] : groups)
      if (k == key) return v;
    groups.emplace_back(key, std::vector<double>{});
    return groups.back().second;
  };
  for (const auto& row : raw.rows)
    group_of(row[c_cond] + "," + row[c_method] + "," + row[c_step])
        .push_back(csvio::parse_double(row[c_mean]));
  csvio::Table out;
  out.metadata = raw.metadata;
  out.header = {"condition", "method", "step", "mean_reward", "std_error", "repetitions"};
  for (const auto& [key, values] : groups) {
    auto first = key.find(',');
    auto second = key.find(',', first + 1);
    out.rows.push_back({key.substr(0, first), key.substr(first + 1, second - first - 1),
                        key.substr(second + 1), csvio::format_double(stats::mean(values)),
                        csvio::format_double(sample_std_error(values)),
                        std::to_string(values.size())});
  }
  return out;
}

std::vector<std::string> plot_stability_spread(const csvio::Table& t,
                                               const std::string& output) {
  const std::size_t c_method = t.column("method"), c_step = t.column("step");
  const std::size_t c_spread = t.column("spread");
  svg::LinePlot plot;
  plot.title = "Latent spread across repetitions";
  plot.x_label = "adaptation step";
  plot.y_label = "spread";
  std::vector<std::string> methods;
  for (const auto& row : t.rows)
    if (std::find(methods.begin(), methods.end(), row[c_method]) == methods.end())
      methods.push_back(row[c_method]);
  for (const std::string& method : methods) {
    svg::LineSeries s;
    s.label = method;
    s.color = method_color(method);
    for (const auto& row : t.rows) {
      if (row[c_method] != method) continue;
      s.x.push_back(csvio::parse_double(row[c_step]));
      s.y.push_back(csvio::parse_double(row[c_spread]));
    }
    plot.series.push_back(std::move(s));
  }
  create_parent_dir(output);
  svg::write_line_plot(output, plot);
  return {output};
}

std::vector<std::string> plot_stability_scatter(const csvio::Table& t,
                                                const std::string& output) {
  const std::size_t c_method = t.column("method"), c_step = t.column("step");
  const std::size_t c_z0 = t.column("z0"), c_z1 = t.column("z1");
  std::set<std::string> steps;
  for (const auto& row : t.rows) steps.insert(row[c_step]);
  std::vector<std::string> written;
  for (const std::string& step : steps) {
    svg::ScatterPlot plot;
    plot.title = "Policy-mean latent actions, step " + step;
    plot.x_label = "z0";
    plot.y_label = "z1";
    for (const std::string& method : {std::string("meta"), std::string("baseline")}) {
      svg::ScatterSeries s;
      s.label = method;
      s.color = method_color(method);
      for (const auto& row : t.rows)
        if (row[c_method] == method && row[c_step] == step)
          s.points.push_back(
              {csvio::parse_double(row[c_z0]), csvio::parse_double(row[c_z1])});
      if (!s.points.empty()) plot.series.push_back(std::move(s));
    }
    const bool has_token = output.find("{step}") != std::string::npos;
    const std::string path =
        has_token || steps.size() > 1 ? instantiate(output, "step", step) : output;
    create_parent_dir(path);
    svg::write_scatter_plot(path, plot);
    written.push_back(path);
  }
  return written;
}

std::vector<std::string> plot_training_curve(const csvio::Table& t,
                                             const std::string& output) {
  const std::size_t c_it = t.column("iteration");
  const std::size_t c_pre = t.column("pre_adapt_reward");
  const std::size_t c_post = t.column("post_adapt_reward");
  svg::LinePlot plot;
  plot.title = "Training curve";
  plot.x_label = "iteration";
  plot.y_label = "mean reward";
  svg::LineSeries pre, post;
  pre.label = "pre-adaptation";
  pre.color = kBaselineColor;
  post.label = "post-adaptation";
  post.color = kMetaColor;
  for (const auto& row : t.rows) {
    pre.x.push_back(csvio::parse_double(row[c_it]));
    pre.y.push_back(csvio::parse_double(row[c_pre]));
    post.x.push_back(csvio::parse_double(row[c_it]));
    post.y.push_back(csvio::parse_double(row[c_post]));
  }
  plot.series.push_back(std::move(post));
  plot.series.push_back(std::move(pre));
  create_parent_dir(output);
  svg::write_line_plot(output, plot);
  return {output};
}

std::vector<std::string> plot_latent_sweep(const csvio::Table& t,
                                           const std::string& output) {
  const std::size_t c_x = t.column("final_x"), c_y = t.column("final_y");
  svg::ScatterPlot plot;
  plot.title = "Latent sweep: final puck positions";
  plot.x_label = "final x [m]";
  plot.y_label = "final y [m]";
  svg::ScatterSeries s;
  s.label = "grid points";
  s.color = kMetaColor;
  for (const auto& row : t.rows)
    s.points.push_back({csvio::parse_double(row[c_x]), csvio::parse_double(row[c_y])});
  plot.series.push_back(std::move(s));
  create_parent_dir(output);
  svg::write_scatter_plot(output, plot);
  return {output};
}

}  // namespace

std::vector<std::string> plot_artifact(const std::string& csv_path,
                                       const std::string& output) {
  csvio::Table t = csvio::read_table(csv_path);
  if (header_is(t, {"condition", "method", "step", "mean_reward", "std_error",
                    "repetitions"}))
    return plot_adaptation_summary(t, output);
  if (header_is(t, {"condition", "method", "repetition", "step", "mean_reward"}))
    return plot_adaptation_summary(aggregate_raw(t), output);
  if (header_is(t, {"method", "step", "spread"})) return plot_stability_spread(t, output);
  if (header_is(t, {"method", "step", "repetition", "goal_index", "z0", "z1"}))
    return plot_stability_scatter(t, output);
  if (header_is(t, {"iteration", "pre_adapt_reward", "post_adapt_reward", "alpha", "loss"}))
    return plot_training_curve(t, output);
  if (header_is(t, {"z0", "z1", "final_x", "final_y", "puck_reward_to_center"}))
    return plot_latent_sweep(t, output);
  throw std::invalid_argument("plot: unrecognized CSV layout in " + csv_path);
}

}  // namespace metapuck
