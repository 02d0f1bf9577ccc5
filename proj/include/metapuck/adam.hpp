#pragma once

#include <cstddef>
#include <vector>

#include "metapuck/param_set.hpp"

namespace metapuck::ad {

// Adam over a fixed ParamSet.  Steps mutate the leaf parameter values in
// place; the optimizer keeps per-scalar first/second moment state keyed by
// entry order, so the same (congruent) ParamSet must be passed every step.
class Adam {
 public:
  explicit Adam(const ParamSet& params, double lr = 3e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  // Applies one update using grads (typically from gradients_as_params).
  void step(ParamSet& params, const ParamSet& grads);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::size_t step_count() const { return step_count_; }

 private:
  ParamSet shape_ref_;  // detached copy used only for congruence checks
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_count_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace metapuck::ad
