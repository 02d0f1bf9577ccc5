#include "metapuck/nn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metapuck::ad {

namespace {
std::string weight_name(const MlpSpec& spec, std::size_t layer) {
  return spec.prefix + ".W" + std::to_string(layer);
}
std::string bias_name(const MlpSpec& spec, std::size_t layer) {
  return spec.prefix + ".b" + std::to_string(layer);
}
}  // namespace

void init_mlp(ParamSet& params, const MlpSpec& spec, Rng& rng) {
  if (spec.layer_sizes.size() < 2)
    throw std::invalid_argument("init_mlp: need at least input and output sizes");
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    std::size_t in = spec.layer_sizes[l];
    std::size_t out = spec.layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / double(in + out));
    std::vector<double> w(out * in);
    for (double& v : w) v = rng.uniform(-limit, limit);
    params.add(weight_name(spec, l), Tensor::parameter({out, in}, std::move(w)));
    params.add(bias_name(spec, l), Tensor::parameter({out}, std::vector<double>(out, 0.0)));
  }
}

Tensor forward_mlp(const ParamSet& params, const MlpSpec& spec, const Tensor& input) {
  if (input.shape() != Shape{spec.input_dim()})
    throw std::invalid_argument("forward_mlp: input shape mismatch");
  Tensor h = input;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    h = add(matvec(params.get(weight_name(spec, l)), h), params.get(bias_name(spec, l)));
    if (l + 1 < spec.num_layers()) h = tanh(h);
  }
  return h;
}

Tensor forward_mlp_batch(const ParamSet& params, const MlpSpec& spec, const Tensor& inputs) {
  if (inputs.shape().size() != 2 || inputs.cols() != spec.input_dim())
    throw std::invalid_argument("forward_mlp_batch: inputs must be {n, in_dim}");
  Tensor h = inputs;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    // rows x in  times  (out x in)^T  ->  rows x out
    h = add_rowvec(matmul(h, params.get(weight_name(spec, l)), false, true),
                   params.get(bias_name(spec, l)));
    if (l + 1 < spec.num_layers()) h = tanh(h);
  }
  return h;
}

Tensor gaussian_log_density(const DiagonalGaussian& dist, const Tensor& x) {
  if (x.shape() != dist.mean.shape() || dist.log_std.shape() != dist.mean.shape())
    throw std::invalid_argument("gaussian_log_density: shape mismatch");
  std::size_t d = dist.mean.size();
  // log p = -d/2 log(2pi) - sum(log_std) - 1/2 sum(((x - mean)/std)^2)
  Tensor diff = sub(x.detach(), dist.mean);
  Tensor inv_std = exp(neg(dist.log_std));
  Tensor z = mul(diff, inv_std);
  Tensor quad = mul_scalar(sum(mul(z, z)), 0.5);
  Tensor log_det = sum(dist.log_std);
  double c = 0.5 * double(d) * std::log(2.0 * std::numbers::pi);
  return add_scalar(neg(add(quad, log_det)), -c);
}

Tensor gaussian_sample(const DiagonalGaussian& dist, Rng& rng) {
  std::vector<double> eps(dist.mean.size());
  for (double& e : eps) e = rng.normal();
  Tensor noise = Tensor::constant(dist.mean.shape(), std::move(eps));
  return add(dist.mean, mul(exp(dist.log_std), noise));
}

}  // namespace metapuck::ad
