#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "metapuck/param_set.hpp"
#include "metapuck/rng.hpp"
#include "metapuck/tensor.hpp"

namespace metapuck::ad {

// Feed-forward network description: sizes of every layer from input to
// output, e.g. {2, 128, 2} is one tanh hidden layer of width 128.  Hidden
// activations are tanh; the output layer is linear.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  std::string prefix;  // parameter name prefix, e.g. "mean"

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
};

// Creates weights W{i} of shape {out, in} and biases b{i} of shape {out}
// under spec.prefix.  Weights use Glorot-uniform init, biases start at zero.
void init_mlp(ParamSet& params, const MlpSpec& spec, Rng& rng);

// Applies the network to a single input vector (shape {in}) -> {out}.
Tensor forward_mlp(const ParamSet& params, const MlpSpec& spec, const Tensor& input);

// Applies the network to a batch of rows (shape {n, in}) -> {n, out}.
Tensor forward_mlp_batch(const ParamSet& params, const MlpSpec& spec, const Tensor& inputs);

// Diagonal Gaussian over a small action/latent vector.
struct DiagonalGaussian {
  Tensor mean;     // shape {d}
  Tensor log_std;  // shape {d}
};

// log N(x | mean, diag(exp(log_std)^2)); x is a constant observation.
// Returns a scalar tensor differentiable in mean and log_std.
Tensor gaussian_log_density(const DiagonalGaussian& dist, const Tensor& x);

// Draws x = mean + exp(log_std) * eps with eps ~ N(0, I); the noise is a
// constant, so the sample stays differentiable in the distribution
// parameters (reparameterization).
Tensor gaussian_sample(const DiagonalGaussian& dist, Rng& rng);

}  // namespace metapuck::ad
