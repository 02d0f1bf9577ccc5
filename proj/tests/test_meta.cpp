#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "metapuck/adaptation.hpp"
#include "metapuck/meta_trainer.hpp"
#include "metapuck/policy.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/stats.hpp"
#include "metapuck/trajectory.hpp"
#include "metapuck/vae.hpp"

using namespace metapuck;

namespace {

// One shared reduced-size generator: the outer loop only needs a working
// z -> strike map, not a polished one.
const VaeModel& test_vae() {
  static const VaeModel model = [] {
    Rng rng(901);
    auto dataset = generate_dataset(rng, 600);
    VaeConfig cfg;
    cfg.epochs = 30;
    Rng train_rng(902);
    return train_vae(dataset, cfg, train_rng);
  }();
  return model;
}

MetaConfig small_config() {
  MetaConfig cfg;
  cfg.tasks_per_batch = 2;
  cfg.rollouts_per_step = 4;
  cfg.adapt_steps = 1;
  cfg.alpha_init = 0.05;
  cfg.policy_hidden = 4;
  return cfg;
}

struct GradPair {
  std::vector<double> policy;
  double log_alpha = 0.0;
};

GradPair grads_of(const ad::Tensor& loss, const ad::ParamSet& policy,
                  const ad::ParamSet& alpha_params) {
  ad::Gradients g = ad::backward(loss);
  GradPair out;
  out.policy = gradients_as_params(policy, g).flatten();
  out.log_alpha = gradients_as_params(alpha_params, g).flatten().at(0);
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("MetaConfig: defaults valid, each invariant enforced") {
  MetaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.tasks_per_batch == 10);
  CHECK(cfg.rollouts_per_step == 16);
  CHECK(cfg.adapt_steps == 3);
  CHECK(cfg.ppo_epochs == 4);
  CHECK(cfg.clip_epsilon == 0.2);

  auto broken = [](auto mutate) {
    MetaConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.tasks_per_batch = 0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.rollouts_per_step = 1; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.clip_epsilon = 0.0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.clip_epsilon = 1.0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.ppo_epochs = 0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.alpha_init = 0.0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.outer_lr = 0.0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.iterations = 0; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](MetaConfig& c) { c.policy_hidden = 0; }).validate(),
                  std::invalid_argument);
}

TEST_CASE("LearnedAlpha: log parameterization keeps the step positive") {
  LearnedAlpha alpha = make_learned_alpha(0.01);
  CHECK(alpha.value() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(alpha.log_tensor().requires_grad());
  CHECK(alpha.log_tensor().size() == 1);
  CHECK(alpha.params.has("log_alpha"));

  // Even a strongly negative log keeps alpha positive.
  LearnedAlpha tiny = make_learned_alpha(1e-12);
  CHECK(tiny.value() > 0.0);
  CHECK_THROWS_AS(make_learned_alpha(0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_learned_alpha(-1.0), std::invalid_argument);
}

TEST_CASE("collect_meta_batch: shapes, determinism, fixed-task replication") {
  MetaConfig cfg = small_config();
  cfg.tasks_per_batch = 3;
  cfg.adapt_steps = 2;
  Rng init(11);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);

  Rng a(21), b(21);
  MetaBatch ba = collect_meta_batch(policy, test_vae(), cfg, 0.05, a);
  MetaBatch bb = collect_meta_batch(policy, test_vae(), cfg, 0.05, b);
  REQUIRE(ba.tasks.size() == 3);
  for (std::size_t t = 0; t < ba.tasks.size(); ++t) {
    const TaskBatch& tb = ba.tasks[t];
    REQUIRE(tb.inner_rollouts.size() == 2);
    REQUIRE(tb.inner_advantages.size() == 2);
    for (std::size_t n = 0; n < 2; ++n) {
      CHECK(tb.inner_rollouts[n].size() == 4);
      CHECK(tb.inner_advantages[n].size() == 4);
      CHECK(stats::mean(tb.inner_advantages[n]) == doctest::Approx(0.0).epsilon(1e-9));
    }
    REQUIRE(tb.outer_rollouts.size() == 4);
    REQUIRE(tb.outer_advantages.size() == 4);
    // Bitwise repeatability under the same seed.
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(tb.outer_rollouts[k].reward == bb.tasks[t].outer_rollouts[k].reward);
      CHECK(tb.outer_rollouts[k].log_density == bb.tasks[t].outer_rollouts[k].log_density);
    }
  }
  // Distinct sampled tasks across the batch.
  CHECK(ba.tasks[0].task.mu_x != ba.tasks[1].task.mu_x);

  Task fixed = fixed_task("anisotropic_low_x");
  Rng c(22);
  MetaBatch bf = collect_meta_batch(policy, test_vae(), cfg, 0.05, c, &fixed);
  for (const TaskBatch& tb : bf.tasks) {
    CHECK(tb.task.mu_x == fixed.mu_x);
    CHECK(tb.task.mu_y == fixed.mu_y);
    CHECK(tb.task.mass == fixed.mass);
  }
}

TEST_CASE("first optimizer epoch sees probability ratios of exactly 1") {
  MetaConfig cfg = small_config();
  cfg.adapt_steps = 2;
  Rng init(31);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);

  Rng roll(32);
  MetaBatch batch = collect_meta_batch(policy, test_vae(), cfg, alpha.value(), roll);
  for (const TaskBatch& tb : batch.tasks) {
    ad::ParamSet theta = adapted_params_on_batch(policy, alpha.log_tensor(), cfg, tb);
    for (const Rollout& r : tb.outer_rollouts) {
      ad::DiagonalGaussian dist = act_distribution(theta, r.goal);
      double again =
          ad::gaussian_log_density(dist, ad::Tensor::constant({2}, {r.action[0], r.action[1]}))
              .value();
      // The value-only collection chain and the graph rebuild share their
      // arithmetic, so the recomputed old-policy density is bit-identical.
      CHECK(again == r.log_density);
    }
  }
}

TEST_CASE("no inner steps degenerate to an independently built PPO loss") {
  MetaConfig cfg = small_config();
  cfg.adapt_steps = 0;
  Rng init(41);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);
  Rng roll(42);
  MetaBatch batch = collect_meta_batch(policy, test_vae(), cfg, alpha.value(), roll);

  GradPair lib = grads_of(outer_loss_on_batch(policy, alpha.log_tensor(), cfg, batch),
                          policy, alpha.params);

  // Plain clipped-surrogate PPO written out directly against the policy.
  ad::Tensor acc = ad::Tensor::scalar(0.0);
  std::size_t count = 0;
  for (const TaskBatch& tb : batch.tasks) {
    for (std::size_t k = 0; k < tb.outer_rollouts.size(); ++k) {
      const Rollout& r = tb.outer_rollouts[k];
      ad::DiagonalGaussian dist = act_distribution(policy, r.goal);
      ad::Tensor logp =
          ad::gaussian_log_density(dist, ad::Tensor::constant({2}, {r.action[0], r.action[1]}));
      ad::Tensor ratio = ad::exp(ad::add_scalar(logp, -r.log_density));
      ad::Tensor clipped = ad::clamp(ratio, 0.8, 1.2);
      const double a = tb.outer_advantages[k];
      acc = ad::add(acc, ad::minimum(ad::mul_scalar(ratio, a), ad::mul_scalar(clipped, a)));
      ++count;
    }
  }
  ad::Tensor plain = ad::mul_scalar(acc, -1.0 / double(count));
  ad::Gradients g = ad::backward(plain);
  std::vector<double> plain_grads = gradients_as_params(policy, g).flatten();

  CHECK(max_abs_diff(lib.policy, plain_grads) <= 1e-9);
  // The inner step size is unused without inner steps.
  CHECK(lib.log_alpha == 0.0);
}

TEST_CASE("at ratio 1 the clipped surrogate gradient is the vanilla policy gradient") {
  MetaConfig cfg = small_config();
  Rng init(51);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);

  auto vanilla_loss = [&](const MetaBatch& batch) {
    ad::Tensor acc = ad::Tensor::scalar(0.0);
    std::size_t count = 0;
    for (const TaskBatch& tb : batch.tasks) {
      ad::ParamSet theta = adapted_params_on_batch(policy, alpha.log_tensor(), cfg, tb);
      for (std::size_t k = 0; k < tb.outer_rollouts.size(); ++k) {
        const Rollout& r = tb.outer_rollouts[k];
        ad::DiagonalGaussian dist = act_distribution(theta, r.goal);
        ad::Tensor logp = ad::gaussian_log_density(
            dist, ad::Tensor::constant({2}, {r.action[0], r.action[1]}));
        acc = ad::add(acc, ad::mul_scalar(logp, tb.outer_advantages[k]));
        ++count;
      }
    }
    return ad::mul_scalar(acc, -1.0 / double(count));
  };

  SUBCASE("without inner steps") { cfg.adapt_steps = 0; }
  SUBCASE("through one inner step") { cfg.adapt_steps = 1; }

  Rng roll(52);
  MetaBatch batch = collect_meta_batch(policy, test_vae(), cfg, alpha.value(), roll);
  GradPair ppo = grads_of(outer_loss_on_batch(policy, alpha.log_tensor(), cfg, batch),
                          policy, alpha.params);
  GradPair vpg = grads_of(vanilla_loss(batch), policy, alpha.params);
  CHECK(max_abs_diff(ppo.policy, vpg.policy) <= 1e-9);
  CHECK(std::abs(ppo.log_alpha - vpg.log_alpha) <= 1e-9);
}

TEST_CASE("outer gradient matches finite differences through the inner update") {
  MetaConfig cfg = small_config();
  Rng init(61);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);
  Rng roll(62);
  MetaBatch batch = collect_meta_batch(policy, test_vae(), cfg, alpha.value(), roll);

  // Check w.r.t. the policy leaves and log_alpha jointly; the combined set
  // shares the same tensors, so perturbing it perturbs the loss inputs.
  ad::ParamSet combined;
  for (const auto& e : policy.entries()) combined.add(e.name, e.tensor);
  combined.add("log_alpha", alpha.log_tensor());

  auto loss_fn = [&]() {
    return outer_loss_on_batch(policy, alpha.log_tensor(), cfg, batch);
  };
  auto res = testing::gradcheck(combined, loss_fn);
  CHECK_MESSAGE(res.max_rel_error < 1e-3, "worst entry: ", res.worst);
}

TEST_CASE("first-order mode: identical inner values, different outer gradients") {
  MetaConfig cfg = small_config();
  cfg.adapt_steps = 2;
  Rng init(71);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);
  Rng roll(72);
  MetaBatch batch = collect_meta_batch(policy, test_vae(), cfg, alpha.value(), roll);

  MetaConfig first = cfg;
  first.first_order = true;

  for (const TaskBatch& tb : batch.tasks) {
    auto second_vals = adapted_params_on_batch(policy, alpha.log_tensor(), cfg, tb).flatten();
    auto first_vals = adapted_params_on_batch(policy, alpha.log_tensor(), first, tb).flatten();
    CHECK(max_abs_diff(second_vals, first_vals) == 0.0);
  }

  GradPair so = grads_of(outer_loss_on_batch(policy, alpha.log_tensor(), cfg, batch),
                         policy, alpha.params);
  GradPair fo = grads_of(outer_loss_on_batch(policy, alpha.log_tensor(), first, batch),
                         policy, alpha.params);
  CHECK(max_abs_diff(so.policy, fo.policy) > 1e-10);
  // log_alpha still gets a gradient in first-order mode (the update uses it).
  CHECK(std::isfinite(fo.log_alpha));
}

TEST_CASE("samples clipped by the ratio band contribute zero gradient") {
  MetaConfig cfg = small_config();
  cfg.adapt_steps = 0;
  Rng init(81);
  ad::ParamSet policy = make_policy(init, cfg.policy_hidden);
  LearnedAlpha alpha = make_learned_alpha(cfg.alpha_init);

  Goal goal{1.1, 0.05};
  auto rollout_with_ratio = [&](double log_ratio, double z_shift) {
    Rollout r;
    r.goal = goal;
    LatentAction z = mean_action(policy, goal);
    z[0] += z_shift;
    r.action = z;
    ad::DiagonalGaussian dist = act_distribution(policy, goal);
    double logp =
        ad::gaussian_log_density(dist, ad::Tensor::constant({2}, {z[0], z[1]})).value();
    r.log_density = logp - log_ratio;  // current ratio becomes exp(log_ratio)
    r.reward = 0.0;
    return r;
  };

  auto loss_grads = [&](double log_ratio, double advantage) {
    TaskBatch tb;
    tb.task = fixed_task("isotropic_low");
    tb.outer_rollouts = {rollout_with_ratio(log_ratio, 0.1),
                         rollout_with_ratio(log_ratio, -0.2)};
    tb.outer_advantages = {advantage, advantage};
    MetaBatch batch;
    batch.tasks.push_back(tb);
    return grads_of(outer_loss_on_batch(policy, alpha.log_tensor(), cfg, batch),
                    policy, alpha.params);
  };

  const double up = std::log(2.0);  // ratio 2, far above 1 + eps

  // Ratio above the band: positive advantages are capped (zero gradient),
  // negative ones are not (the surrogate is a lower bound).
  GradPair high_pos = loss_grads(up, 1.0);
  for (double g : high_pos.policy) CHECK(g == 0.0);
  GradPair high_neg = loss_grads(up, -1.0);
  CHECK(max_abs_diff(high_neg.policy, std::vector<double>(high_neg.policy.size(), 0.0)) >
        1e-12);

  // Ratio below the band: mirrored behavior.
  GradPair low_neg = loss_grads(-up, -1.0);
  for (double g : low_neg.policy) CHECK(g == 0.0);
  GradPair low_pos = loss_grads(-up, 1.0);
  CHECK(max_abs_diff(low_pos.policy, std::vector<double>(low_pos.policy.size(), 0.0)) >
        1e-12);
}

TEST_CASE("meta_iteration and train_meta: finite diagnostics, bit-reproducible") {
  MetaConfig cfg = small_config();
  cfg.policy_hidden = 8;
  cfg.ppo_epochs = 2;
  cfg.iterations = 3;
  cfg.seed = 4242;

  TrainResult a = train_meta(cfg, test_vae());
  TrainResult b = train_meta(cfg, test_vae());
  REQUIRE(a.curve.size() == 3);
  REQUIRE(b.curve.size() == 3);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].iteration == i);
    CHECK(std::isfinite(a.curve[i].pre_adapt_reward));
    CHECK(std::isfinite(a.curve[i].loss));
    CHECK(a.curve[i].alpha > 0.0);
    // Bitwise equality between the two runs.
    CHECK(a.curve[i].pre_adapt_reward == b.curve[i].pre_adapt_reward);
    CHECK(a.curve[i].post_adapt_reward == b.curve[i].post_adapt_reward);
    CHECK(a.curve[i].alpha == b.curve[i].alpha);
    CHECK(a.curve[i].loss == b.curve[i].loss);
  }
  CHECK(max_abs_diff(a.final_policy.flatten(), b.final_policy.flatten()) == 0.0);
  CHECK(a.final_alpha == b.final_alpha);
  CHECK(a.final_alpha > 0.0);
  CHECK(std::isfinite(a.final_alpha));
  CHECK(ad::ParamSet::congruent(a.final_policy, a.best_policy));
  CHECK(a.best_iteration < 3);

  // The best snapshot is the pre-update policy of the best-scoring iteration;
  // for iteration 0 that is the untouched initial policy.
  if (a.best_iteration == 0) {
    MetaTrainState fresh = make_meta_train_state(cfg);
    CHECK(max_abs_diff(a.best_policy.flatten(), fresh.policy.flatten()) == 0.0);
  }
}

TEST_CASE("train_baseline: flat PPO, fixed alpha, congruent with the meta run") {
  MetaConfig cfg = small_config();
  cfg.policy_hidden = 8;
  cfg.ppo_epochs = 2;
  cfg.iterations = 2;
  cfg.seed = 77;

  TrainResult base = train_baseline(cfg, test_vae());
  REQUIRE(base.curve.size() == 2);
  for (const TrainCurveRow& row : base.curve) {
    // No inner loop: the pre- and post-adaptation measures coincide.
    CHECK(row.pre_adapt_reward == row.post_adapt_reward);
    CHECK(std::isfinite(row.loss));
  }
  // log_alpha never enters the flat graph, so Adam leaves it untouched.
  CHECK(base.final_alpha == make_learned_alpha(cfg.alpha_init).value());

  TrainResult meta = train_meta(cfg, test_vae());
  CHECK(ad::ParamSet::congruent(base.final_policy, meta.final_policy));
  CHECK(ad::ParamSet::congruent(base.best_policy, meta.best_policy));
}

TEST_CASE("train_oracle: pinned condition, improves its own reward") {
  MetaConfig cfg;
  cfg.tasks_per_batch = 8;
  cfg.rollouts_per_step = 8;
  cfg.adapt_steps = 0;
  cfg.alpha_init = 0.01;
  cfg.policy_hidden = 16;
  cfg.ppo_epochs = 4;
  cfg.outer_lr = 1e-2;
  cfg.iterations = 30;
  cfg.seed = 99;

  Task task = fixed_task("isotropic_low");
  TrainResult oracle = train_oracle(task, cfg, test_vae());
  REQUIRE(oracle.curve.size() == 30);

  std::vector<double> head, tail;
  for (std::size_t i = 0; i < 5; ++i) head.push_back(oracle.curve[i].post_adapt_reward);
  for (std::size_t i = 25; i < 30; ++i) tail.push_back(oracle.curve[i].post_adapt_reward);
  CHECK(stats::mean(tail) > stats::mean(head));
}

TEST_CASE("checkpoint: bit-exact round-trip, malformed files rejected") {
  MetaConfig cfg = small_config();
  cfg.first_order = true;
  cfg.seed = 123456789ULL;
  Rng init(91);

  Checkpoint ckpt;
  ckpt.kind = "meta";
  ckpt.alpha = 0.0213;
  ckpt.config = cfg;
  ckpt.policy = make_policy(init, cfg.policy_hidden);

  const std::string path = "test_meta_ckpt.txt";
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.kind == "meta");
  CHECK(loaded.alpha == ckpt.alpha);
  CHECK(loaded.config.tasks_per_batch == cfg.tasks_per_batch);
  CHECK(loaded.config.rollouts_per_step == cfg.rollouts_per_step);
  CHECK(loaded.config.adapt_steps == cfg.adapt_steps);
  CHECK(loaded.config.alpha_init == cfg.alpha_init);
  CHECK(loaded.config.clip_epsilon == cfg.clip_epsilon);
  CHECK(loaded.config.first_order == cfg.first_order);
  CHECK(loaded.config.seed == cfg.seed);
  CHECK(ad::ParamSet::congruent(loaded.policy, ckpt.policy));
  CHECK(max_abs_diff(loaded.policy.flatten(), ckpt.policy.flatten()) == 0.0);
  std::remove(path.c_str());

  Checkpoint bad = ckpt;
  bad.kind = "unheard-of";
  CHECK_THROWS_AS(save_checkpoint(bad, "test_meta_bad.txt"), std::invalid_argument);
  CHECK_THROWS_AS(load_checkpoint("does_not_exist.ckpt"), std::runtime_error);

  std::ofstream os("test_meta_garbage.txt");
  os << "something-else 1\n";
  os.close();
  CHECK_THROWS_AS(load_checkpoint("test_meta_garbage.txt"), std::runtime_error);
  std::remove("test_meta_garbage.txt");
}

TEST_CASE("training curve CSV: header plus one row per iteration") {
  std::vector<TrainCurveRow> curve{{0, -1.5, -1.0, 0.01, 0.2}, {1, -1.2, -0.7, 0.011, 0.1}};
  const std::string path = "test_meta_curve.csv";
  save_training_curve_csv(path, curve);
  std::ifstream is(path);
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  CHECK(line == "iteration,pre_adapt_reward,post_adapt_reward,alpha,loss");
  std::size_t rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
  is.close();
  std::remove(path.c_str());
}
