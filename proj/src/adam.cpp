#include "metapuck/adam.hpp"

#include <cmath>

namespace metapuck::ad {

Adam::Adam(const ParamSet& params, double lr, double beta1, double beta2, double eps)
    : shape_ref_(params.detach()), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.tensor.size(), 0.0);
    v_.emplace_back(e.tensor.size(), 0.0);
  }
}

void Adam::step(ParamSet& params, const ParamSet& grads) {
  ParamSet::check_congruent(shape_ref_, params, "Adam::step(params)");
  ParamSet::check_congruent(shape_ref_, grads, "Adam::step(grads)");
  ++step_count_;
  double bc1 = 1.0 - std::pow(beta1_, double(step_count_));
  double bc2 = 1.0 - std::pow(beta2_, double(step_count_));
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    auto& value = params.entries_mut()[i].tensor.values_mut();
    const auto& g = grads.entries()[i].tensor.values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      double m_hat = m[k] / bc1;
      double v_hat = v[k] / bc2;
      value[k] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

}  // namespace metapuck::ad
