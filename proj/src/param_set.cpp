#include "metapuck/param_set.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace metapuck::ad {

void ParamSet::add(std::string name, Tensor tensor) {
  if (index_.count(name))
    throw std::invalid_argument("ParamSet: duplicate entry name '" + name + "'");
  if (!tensor.defined()) throw std::invalid_argument("ParamSet: undefined tensor for '" + name + "'");
  index_[name] = entries_.size();
  entries_.push_back({std::move(name), std::move(tensor)});
}

bool ParamSet::has(std::string_view name) const { return index_.count(std::string(name)) != 0; }

const Tensor& ParamSet::get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw std::invalid_argument("ParamSet: no entry named '" + std::string(name) + "'");
  return entries_[it->second].tensor;
}

void ParamSet::set(std::string_view name, Tensor tensor) {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw std::invalid_argument("ParamSet: no entry named '" + std::string(name) + "'");
  if (tensor.shape() != entries_[it->second].tensor.shape())
    throw std::invalid_argument("ParamSet: shape change for '" + std::string(name) + "'");
  entries_[it->second].tensor = std::move(tensor);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

bool ParamSet::congruent(const ParamSet& a, const ParamSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].name != b.entries_[i].name) return false;
    if (a.entries_[i].tensor.shape() != b.entries_[i].tensor.shape()) return false;
  }
  return true;
}

void ParamSet::check_congruent(const ParamSet& a, const ParamSet& b, const std::string& context) {
  if (!congruent(a, b))
    throw std::invalid_argument(context + ": parameter sets are not congruent");
}

ParamSet ParamSet::detach() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, e.tensor.detach());
  return out;
}

ParamSet ParamSet::clone_parameters() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, Tensor::parameter(e.tensor.shape(), e.tensor.values()));
  return out;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& e : entries_)
    flat.insert(flat.end(), e.tensor.values().begin(), e.tensor.values().end());
  return flat;
}

void ParamSet::load_flat(const std::vector<double>& flat) {
  if (flat.size() != scalar_count())
    throw std::invalid_argument("ParamSet::load_flat: expected " + std::to_string(scalar_count()) +
                                " values, got " + std::to_string(flat.size()));
  std::size_t off = 0;
  for (auto& e : entries_) {
    auto& v = e.tensor.values_mut();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = flat[off++];
  }
}

namespace {
void write_double(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}
}  // namespace

void ParamSet::save(std::ostream& os) const {
  os << "metapuck-paramset 1\n";
  os << "params " << entries_.size() << "\n";
  for (const auto& e : entries_) {
    os << "param " << e.name << " " << e.tensor.shape().size();
    for (std::size_t d : e.tensor.shape()) os << " " << d;
    os << "\n";
    const auto& v = e.tensor.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) os << " ";
      write_double(os, v[i]);
    }
    os << "\n";
  }
  os << "end\n";
}

ParamSet ParamSet::load(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "metapuck-paramset" || version != 1)
    throw std::invalid_argument("ParamSet::load: not a metapuck-paramset v1 stream");
  std::string kw;
  std::size_t count = 0;
  if (!(is >> kw >> count) || kw != "params")
    throw std::invalid_argument("ParamSet::load: missing params count");
  ParamSet out;
  for (std::size_t p = 0; p < count; ++p) {
    std::string name;
    std::size_t ndim = 0;
    if (!(is >> kw >> name >> ndim) || kw != "param")
      throw std::invalid_argument("ParamSet::load: malformed param header");
    Shape shape(ndim);
    std::size_t numel = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
      if (!(is >> shape[i])) throw std::invalid_argument("ParamSet::load: malformed shape");
      numel *= shape[i];
    }
    std::vector<double> values(numel);
    for (std::size_t i = 0; i < numel; ++i)
      if (!(is >> values[i]))
        throw std::invalid_argument("ParamSet::load: truncated values for '" + name + "'");
    out.add(name, Tensor::parameter(std::move(shape), std::move(values)));
  }
  if (!(is >> kw) || kw != "end") throw std::invalid_argument("ParamSet::load: missing end marker");
  return out;
}

ParamSet gradients_as_params(const ParamSet& params, const Gradients& grads) {
  ParamSet out;
  for (const auto& e : params.entries()) out.add(e.name, grads.grad(e.tensor));
  return out;
}

ParamSet functional_update(const ParamSet& params, const ParamSet& grads, double step) {
  ParamSet::check_congruent(params, grads, "functional_update");
  ParamSet out;
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& p = params.entries()[i];
    const auto& g = grads.entries()[i];
    out.add(p.name, sub(p.tensor, mul_scalar(g.tensor, step)));
  }
  return out;
}

ParamSet functional_update(const ParamSet& params, const ParamSet& grads, const Tensor& step) {
  ParamSet::check_congruent(params, grads, "functional_update");
  if (step.size() != 1) throw std::invalid_argument("functional_update: step must be scalar");
  ParamSet out;
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& p = params.entries()[i];
    const auto& g = grads.entries()[i];
    out.add(p.name, sub(p.tensor, scale(step, g.tensor)));
  }
  return out;
}

double grad_norm(const ParamSet& grads) {
  double sq = 0.0;
  for (const auto& e : grads.entries())
    for (double v : e.tensor.values()) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace metapuck::ad
