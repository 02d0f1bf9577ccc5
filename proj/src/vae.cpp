#include "metapuck/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "metapuck/adam.hpp"
#include "metapuck/nn.hpp"

namespace metapuck {

using ad::ParamSet;
using ad::Tensor;

namespace {

constexpr std::size_t kCoords = Trajectory::kFlatSize;  // 51

ad::MlpSpec enc_trunk(const VaeConfig& c) { return {{kCoords, c.hidden}, "enc"}; }
ad::MlpSpec enc_mean(const VaeConfig& c) { return {{c.hidden, kLatentDim}, "enc_mean"}; }
ad::MlpSpec enc_logvar(const VaeConfig& c) { return {{c.hidden, kLatentDim}, "enc_logvar"}; }
ad::MlpSpec dec_spec(const VaeConfig& c) { return {{kLatentDim, c.hidden, kCoords}, "dec"}; }

}  // namespace

double beta_at(const VaeConfig& cfg, std::size_t epoch) {
  if (cfg.epochs <= 1) return cfg.beta_end;
  double f = double(epoch) / double(cfg.epochs - 1);
  return std::exp(std::log(cfg.beta_start) +
                  f * (std::log(cfg.beta_end) - std::log(cfg.beta_start)));
}

std::vector<double> VaeModel::standardize(const std::vector<double>& flat) const {
  std::vector<double> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i)
    out[i] = (flat[i] - feat_mean[i]) / feat_std[i];
  return out;
}

std::vector<double> VaeModel::destandardize(const std::vector<double>& flat) const {
  std::vector<double> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i)
    out[i] = flat[i] * feat_std[i] + feat_mean[i];
  return out;
}

VaeModel make_vae(const VaeConfig& cfg, Rng& rng) {
  VaeModel m;
  m.config = cfg;
  init_mlp(m.params, enc_trunk(cfg), rng);
  init_mlp(m.params, enc_mean(cfg), rng);
  init_mlp(m.params, enc_logvar(cfg), rng);
  init_mlp(m.params, dec_spec(cfg), rng);
  m.feat_mean.assign(kCoords, 0.0);
  m.feat_std.assign(kCoords, 1.0);
  return m;
}

VaeLossParts vae_loss(const ParamSet& params, const VaeConfig& cfg,
                      const Tensor& batch, const Tensor& eps, double beta) {
  const std::size_t n = batch.rows();
  Tensor h = ad::tanh(forward_mlp_batch(params, enc_trunk(cfg), batch));
  Tensor mean = forward_mlp_batch(params, enc_mean(cfg), h);
  Tensor logvar = ad::clamp(forward_mlp_batch(params, enc_logvar(cfg), h), -10.0, 10.0);

  // z = mean + exp(logvar / 2) * eps  (reparameterized draw)
  Tensor std_dev = ad::exp(ad::mul_scalar(logvar, 0.5));
  Tensor z = ad::add(mean, ad::mul(std_dev, eps));
  Tensor recon_out = forward_mlp_batch(params, dec_spec(cfg), z);

  Tensor diff = ad::sub(recon_out, batch);
  Tensor recon = ad::mean(ad::mul(diff, diff));

  // KL(q || N(0,I)) = 1/2 sum(mean^2 + var - 1 - logvar), averaged over the batch
  Tensor var = ad::exp(logvar);
  Tensor inner = ad::add_scalar(ad::sub(ad::add(ad::mul(mean, mean), var), logvar), -1.0);
  Tensor kl = ad::mul_scalar(ad::sum(inner), 0.5 / double(n));

  VaeLossParts parts;
  parts.recon = recon;
  parts.kl = kl;
  parts.loss = ad::add(recon, ad::mul_scalar(kl, beta));
  return parts;
}

VaeModel train_vae(const std::vector<Trajectory>& dataset, const VaeConfig& cfg,
                   Rng& rng, const VaeEpochHook& hook) {
  if (dataset.empty()) throw std::invalid_argument("train_vae: dataset is empty");

  VaeModel model = make_vae(cfg, rng);

  // Per-coordinate standardization; constant coordinates (std ~ 0) pass
  // through unscaled so the division stays finite.
  const std::size_t n = dataset.size();
  std::vector<std::vector<double>> flats(n);
  for (std::size_t i = 0; i < n; ++i) flats[i] = dataset[i].flatten();
  for (std::size_t c = 0; c < kCoords; ++c) {
    double s = 0.0;
    for (const auto& f : flats) s += f[c];
    double mean = s / double(n);
    double sq = 0.0;
    for (const auto& f : flats) sq += (f[c] - mean) * (f[c] - mean);
    double sd = std::sqrt(sq / double(n));
    model.feat_mean[c] = mean;
    model.feat_std[c] = sd < 1e-8 ? 1.0 : sd;
  }

  std::vector<std::vector<double>> standardized(n);
  for (std::size_t i = 0; i < n; ++i) standardized[i] = model.standardize(flats[i]);

  ad::Adam opt(model.params, cfg.lr);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double beta = beta_at(cfg, epoch);
    // Fisher-Yates with the run's RNG keeps training bit-reproducible.
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.index(i + 1)]);

    double recon_sum = 0.0, kl_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      std::size_t len = std::min(cfg.batch, n - start);
      std::vector<double> rows(len * kCoords);
      for (std::size_t r = 0; r < len; ++r)
        std::copy(standardized[order[start + r]].begin(),
                  standardized[order[start + r]].end(), rows.begin() + r * kCoords);
      std::vector<double> noise(len * kLatentDim);
      for (double& e : noise) e = rng.normal();

      Tensor batch = Tensor::constant({len, kCoords}, std::move(rows));
      Tensor eps = Tensor::constant({len, kLatentDim}, std::move(noise));
      VaeLossParts parts = vae_loss(model.params, cfg, batch, eps, beta);
      ad::Gradients grads = ad::backward(parts.loss);
      ParamSet g = gradients_as_params(model.params, grads);
      opt.step(model.params, g);

      recon_sum += parts.recon.value();
      kl_sum += parts.kl.value();
      ++batches;
    }
    model.trained_beta = beta;
    if (hook) hook(epoch, recon_sum / double(batches), kl_sum / double(batches), beta);
  }
  return model;
}

Trajectory decode(const VaeModel& model, const LatentAction& z, std::size_t* clamp_events) {
  Tensor latent = Tensor::constant({kLatentDim}, {z[0], z[1]});
  Tensor out = forward_mlp(model.params, dec_spec(model.config), latent);
  std::vector<double> flat = model.destandardize(out.values());
  for (std::size_t i = 0; i < Trajectory::kNumWaypoints; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {  // x and y only; yaw is not a position
      double& v = flat[i * 3 + c];
      if (std::abs(v) > Trajectory::kWorkspaceBound) {
        v = std::clamp(v, -Trajectory::kWorkspaceBound, Trajectory::kWorkspaceBound);
        if (clamp_events) ++*clamp_events;
      }
    }
  }
  return Trajectory::from_flat(flat);
}

LatentAction encode_mean(const VaeModel& model, const Trajectory& traj) {
  Tensor in = Tensor::constant({kCoords}, model.standardize(traj.flatten()));
  Tensor h = ad::tanh(forward_mlp(model.params, enc_trunk(model.config), in));
  Tensor mean = forward_mlp(model.params, enc_mean(model.config), h);
  return {mean.at(0), mean.at(1)};
}

std::vector<SweepRow> latent_sweep(const VaeModel& model, const Task& task,
                                   const std::vector<LatentAction>& grid) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  Goal center;  // target region center
  for (const auto& z : grid) {
    Trajectory traj = decode(model, z);
    StrikeResult res = execute_strike(task, traj);
    rows.push_back({z[0], z[1], res.final_state.x, res.final_state.y,
                    reward(res.final_state, center)});
  }
  return rows;
}

namespace {
void write_doubles(std::ostream& os, const std::vector<double>& v) {
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << " ";
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << buf;
  }
  os << "\n";
}
std::vector<double> read_doubles(std::istream& is, std::size_t count, const char* what) {
  std::vector<double> v(count);
  for (auto& x : v)
    if (!(is >> x)) throw std::runtime_error(std::string("load_vae: truncated ") + what);
  return v;
}
}  // namespace

void save_vae(const VaeModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_vae: cannot open " + path);
  os << "metapuck-vae 1\n";
  os << "hidden " << model.config.hidden << "\n";
  os << "epochs " << model.config.epochs << "\n";
  os << "batch " << model.config.batch << "\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "lr %.17g\nbeta_start %.17g\nbeta_end %.17g\ntrained_beta %.17g\n",
                model.config.lr, model.config.beta_start, model.config.beta_end,
                model.trained_beta);
  os << buf;
  os << "feat_mean " << model.feat_mean.size() << "\n";
  write_doubles(os, model.feat_mean);
  os << "feat_std " << model.feat_std.size() << "\n";
  write_doubles(os, model.feat_std);
  model.params.save(os);
}

VaeModel load_vae(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_vae: cannot open " + path);
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "metapuck-vae" || version != 1)
    throw std::runtime_error("load_vae: not a metapuck-vae v1 file: " + path);
  VaeModel m;
  auto expect = [&](const char* key) {
    std::string k;
    if (!(is >> k) || k != key)
      throw std::runtime_error(std::string("load_vae: expected key ") + key);
  };
  expect("hidden");
  is >> m.config.hidden;
  expect("epochs");
  is >> m.config.epochs;
  expect("batch");
  is >> m.config.batch;
  expect("lr");
  is >> m.config.lr;
  expect("beta_start");
  is >> m.config.beta_start;
  expect("beta_end");
  is >> m.config.beta_end;
  expect("trained_beta");
  is >> m.trained_beta;
  std::size_t count = 0;
  expect("feat_mean");
  is >> count;
  m.feat_mean = read_doubles(is, count, "feat_mean");
  expect("feat_std");
  is >> count;
  m.feat_std = read_doubles(is, count, "feat_std");
  m.params = ParamSet::load(is);
  return m;
}

}  // namespace metapuck
