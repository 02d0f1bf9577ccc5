#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "metapuck/param_set.hpp"
#include "metapuck/puck_sim.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/tensor.hpp"
#include "metapuck/trajectory.hpp"

namespace metapuck {

// Latent strike command; two coordinates span the whole learned strike
// manifold (the generator's dataset has exactly two degrees of freedom).
constexpr std::size_t kLatentDim = 2;
using LatentAction = std::array<double, kLatentDim>;

struct VaeConfig {
  std::size_t hidden = 64;
  std::size_t epochs = 200;
  std::size_t batch = 64;
  double lr = 1e-3;
  double beta_start = 1e-7;
  double beta_end = 1e-3;
};

// Log-linear annealing: epoch 0 gives beta_start, the last epoch beta_end.
double beta_at(const VaeConfig& cfg, std::size_t epoch);

struct VaeModel {
  VaeConfig config;
  ad::ParamSet params;  // encoder trunk + heads, decoder
  std::vector<double> feat_mean;  // per-coordinate standardization (51 each)
  std::vector<double> feat_std;   // constant coordinates keep std 1.0
  double trained_beta = 0.0;

  std::vector<double> standardize(const std::vector<double>& flat) const;
  std::vector<double> destandardize(const std::vector<double>& flat) const;
};

// Fresh untrained model (standardization set to identity).
VaeModel make_vae(const VaeConfig& cfg, Rng& rng);

struct VaeLossParts {
  ad::Tensor loss;   // recon + beta * kl
  ad::Tensor recon;  // mean squared error over standardized coordinates
  ad::Tensor kl;     // mean per-sample KL(q(z|u) || N(0, I))
};

// Differentiable ELBO pieces for one standardized batch {n, 51} with fixed
// reparameterization noise {n, 2}; exposed so gradient checks can pin eps.
VaeLossParts vae_loss(const ad::ParamSet& params, const VaeConfig& cfg,
                      const ad::Tensor& batch, const ad::Tensor& eps, double beta);

using VaeEpochHook =
    std::function<void(std::size_t epoch, double recon, double kl, double beta)>;

VaeModel train_vae(const std::vector<Trajectory>& dataset, const VaeConfig& cfg,
                   Rng& rng, const VaeEpochHook& hook = {});

// Decoder mean at z, de-standardized; x/y clamped into the workspace. Each
// clamped coordinate bumps *clamp_events when given.
Trajectory decode(const VaeModel& model, const LatentAction& z,
                  std::size_t* clamp_events = nullptr);

// Posterior mean for one trajectory (diagnostics).
LatentAction encode_mean(const VaeModel& model, const Trajectory& traj);

struct SweepRow {
  double z0, z1;
  double final_x, final_y;
  double puck_reward_to_center;
};

// Decodes every grid point and strikes under the given task.
std::vector<SweepRow> latent_sweep(const VaeModel& model, const Task& task,
                                   const std::vector<LatentAction>& grid);

void save_vae(const VaeModel& model, const std::string& path);
VaeModel load_vae(const std::string& path);

}  // namespace metapuck
