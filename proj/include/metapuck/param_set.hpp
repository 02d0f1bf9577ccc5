#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "metapuck/tensor.hpp"

namespace metapuck::ad {

// Ordered, named collection of the learnable tensors of one network.
// Iteration order is insertion order and is stable across runs, which makes
// optimizer state, serialization, and congruence checks deterministic.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  ParamSet() = default;

  void add(std::string name, Tensor tensor);
  bool has(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  void set(std::string_view name, Tensor tensor);  // replaces an existing entry

  const std::vector<Entry>& entries() const { return entries_; }
  // In-place value edits only (optimizers, checkpoint loading); renaming or
  // reshaping entries through this reference is not supported.
  std::vector<Entry>& entries_mut() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  // Same names, same order, same shapes.
  static bool congruent(const ParamSet& a, const ParamSet& b);
  static void check_congruent(const ParamSet& a, const ParamSet& b, const std::string& context);

  // Entry-wise detached copies (constants).
  ParamSet detach() const;
  // Fresh grad-tracked leaves with copied values.
  ParamSet clone_parameters() const;

  // Flattened values in iteration order.
  std::vector<double> flatten() const;
  void load_flat(const std::vector<double>& flat);  // writes values in place

  // Self-describing text serialization; 17 significant digits, so the
  // round-trip is bit-exact.
  void save(std::ostream& os) const;
  static ParamSet load(std::istream& is);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// grads-as-ParamSet congruent with params; zeros where the loss never
// touched a parameter.
ParamSet gradients_as_params(const ParamSet& params, const Gradients& grads);

// theta - step * grad, entry-wise. The result tensors stay in the graph so a
// later loss can be differentiated w.r.t. the original parameters.
ParamSet functional_update(const ParamSet& params, const ParamSet& grads, double step);
ParamSet functional_update(const ParamSet& params, const ParamSet& grads, const Tensor& step);

double grad_norm(const ParamSet& grads);

}  // namespace metapuck::ad
