#include "metapuck/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace metapuck::ad {

namespace {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

[[noreturn]] void fail(const std::string& op, const std::string& what) {
  throw std::invalid_argument("tensor op " + op + ": " + what);
}

void check_same_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_finite(const std::string& op, const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) fail(op, "produced non-finite value");
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

TensorNode::~TensorNode() {
  // Unlink parent chains iteratively; naive recursive shared_ptr teardown
  // overflows the stack on long op chains.
  std::vector<std::shared_ptr<TensorNode>> pending;
  auto drain = [&pending](TensorNode& n) {
    for (Tensor& p : n.parents)
      if (p.node_) pending.push_back(std::move(p.node_));
    n.parents.clear();
  };
  drain(*this);
  while (!pending.empty()) {
    std::shared_ptr<TensorNode> n = std::move(pending.back());
    pending.pop_back();
    if (n.use_count() == 1) drain(*n);
  }
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("Tensor::constant: shape " + shape_str(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->values.assign(shape_numel(shape), fill);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("Tensor: use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return shape_numel(shape()); }

std::size_t Tensor::rows() const {
  if (shape().size() != 2) fail("rows", "tensor is not 2-D: " + shape_str(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (shape().size() != 2) fail("cols", "tensor is not 2-D: " + shape_str(shape()));
  return shape()[1];
}

const std::vector<double>& Tensor::values() const {
  if (!node_) throw std::logic_error("Tensor: use of undefined tensor");
  return node_->values;
}

double Tensor::value() const {
  if (size() != 1) fail("value", "tensor " + shape_str(shape()) + " is not scalar");
  return node_->values[0];
}

double Tensor::at(std::size_t i) const { return values().at(i); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::vector<double>& Tensor::values_mut() {
  if (!node_) throw std::logic_error("Tensor: use of undefined tensor");
  return node_->values;
}

Tensor Tensor::detach() const { return constant(shape(), values()); }

// Shared op constructor: constant-folds when no input is grad-tracked.
Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<std::vector<Tensor>(const Tensor&, const Tensor&)> backward) {
  bool rg = false;
  for (const Tensor& p : parents) rg = rg || p.requires_grad();
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = rg;
  if (rg) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a, b},
                 [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op(a.shape(), std::move(out), {a, b},
                 [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{g, neg(g)}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](const Tensor& self, const Tensor& g) {
    const Tensor& a = self.node()->parents[0];
    const Tensor& b = self.node()->parents[1];
    return std::vector<Tensor>{mul(g, b), mul(g, a)};
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape("div", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  check_finite("div", out);
  return make_op(a.shape(), std::move(out), {a, b}, [](const Tensor& self, const Tensor& g) {
    const Tensor& b = self.node()->parents[1];
    Tensor da = div(g, b);
    Tensor db = neg(div(mul(g, self), b));
    return std::vector<Tensor>{da, db};
  });
}

Tensor neg(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -av[i];
  return make_op(a.shape(), std::move(out), {a},
                 [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{neg(g)}; });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  return make_op(a.shape(), std::move(out), {a},
                 [](const Tensor&, const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  return make_op(a.shape(), std::move(out), {a}, [c](const Tensor&, const Tensor& g) {
    return std::vector<Tensor>{mul_scalar(g, c)};
  });
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  check_finite("exp", out);
  return make_op(a.shape(), std::move(out), {a}, [](const Tensor& self, const Tensor& g) {
    return std::vector<Tensor>{mul(g, self)};
  });
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(av[i]);
  check_finite("log", out);
  return make_op(a.shape(), std::move(out), {a}, [](const Tensor& self, const Tensor& g) {
    const Tensor& a = self.node()->parents[0];
    return std::vector<Tensor>{div(g, a)};
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  return make_op(a.shape(), std::move(out), {a}, [](const Tensor& self, const Tensor& g) {
    Tensor ones = Tensor::full(self.shape(), 1.0);
    return std::vector<Tensor>{mul(g, sub(ones, mul(self, self)))};
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) fail("clamp", "lo > hi");
  std::vector<double> out(a.size());
  std::vector<double> mask(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = av[i] < lo ? lo : (av[i] > hi ? hi : av[i]);
    mask[i] = (av[i] > lo && av[i] < hi) ? 1.0 : 0.0;
  }
  return make_op(a.shape(), std::move(out), {a},
                 [mask](const Tensor& self, const Tensor& g) {
                   return std::vector<Tensor>{mul(g, Tensor::constant(self.shape(), mask))};
                 });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  check_same_shape("minimum", a, b);
  std::vector<double> out(a.size());
  std::vector<double> pick_a(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    pick_a[i] = av[i] <= bv[i] ? 1.0 : 0.0;
    out[i] = pick_a[i] != 0.0 ? av[i] : bv[i];
  }
  return make_op(a.shape(), std::move(out), {a, b},
                 [pick_a](const Tensor& self, const Tensor& g) {
                   std::vector<double> pick_b(pick_a.size());
                   for (std::size_t i = 0; i < pick_a.size(); ++i) pick_b[i] = 1.0 - pick_a[i];
                   Tensor ma = Tensor::constant(self.shape(), pick_a);
                   Tensor mb = Tensor::constant(self.shape(), pick_b);
                   return std::vector<Tensor>{mul(g, ma), mul(g, mb)};
                 });
}

// ---- reductions / broadcasts ----

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op({1}, {s}, {a}, [](const Tensor& self, const Tensor& g) {
    const Tensor& a = self.node()->parents[0];
    return std::vector<Tensor>{scale(g, Tensor::full(a.shape(), 1.0))};
  });
}

Tensor mean(const Tensor& a) { return mul_scalar(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor scale(const Tensor& s, const Tensor& x) {
  if (s.size() != 1) fail("scale", "first argument must be scalar, got " + shape_str(s.shape()));
  const double sv = s.values()[0];
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv * xv[i];
  return make_op(x.shape(), std::move(out), {s, x}, [](const Tensor& self, const Tensor& g) {
    const Tensor& s = self.node()->parents[0];
    const Tensor& x = self.node()->parents[1];
    return std::vector<Tensor>{sum(mul(g, x)), scale(s, g)};
  });
}

Tensor sum_rows(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(c, 0.0);
  const auto& mv = m.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += mv[i * c + j];
  return make_op({c}, std::move(out), {m}, [r](const Tensor&, const Tensor& g) {
    return std::vector<Tensor>{broadcast_rows(g, r)};
  });
}

Tensor broadcast_rows(const Tensor& v, std::size_t rows) {
  if (v.shape().size() != 1) fail("broadcast_rows", "expects 1-D input, got " + shape_str(v.shape()));
  const std::size_t c = v.size();
  std::vector<double> out(rows * c);
  const auto& vv = v.values();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = vv[j];
  return make_op({rows, c}, std::move(out), {v}, [](const Tensor&, const Tensor& g) {
    return std::vector<Tensor>{sum_rows(g)};
  });
}

// ---- linear algebra ----

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.shape().size() != 2 || x.shape().size() != 1 || w.cols() != x.size())
    fail("matvec", "incompatible shapes " + shape_str(w.shape()) + " x " + shape_str(x.shape()));
  const std::size_t r = w.rows(), c = w.cols();
  std::vector<double> out(r, 0.0);
  const auto &wv = w.values(), &xv = x.values();
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += wv[i * c + j] * xv[j];
    out[i] = acc;
  }
  return make_op({r}, std::move(out), {w, x}, [](const Tensor& self, const Tensor& g) {
    const Tensor& w = self.node()->parents[0];
    const Tensor& x = self.node()->parents[1];
    return std::vector<Tensor>{outer(g, x), matvec_t(w, g)};
  });
}

Tensor matvec_t(const Tensor& w, const Tensor& y) {
  if (w.shape().size() != 2 || y.shape().size() != 1 || w.rows() != y.size())
    fail("matvec_t", "incompatible shapes " + shape_str(w.shape()) + " x " + shape_str(y.shape()));
  const std::size_t r = w.rows(), c = w.cols();
  std::vector<double> out(c, 0.0);
  const auto &wv = w.values(), &yv = y.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += wv[i * c + j] * yv[i];
  return make_op({c}, std::move(out), {w, y}, [](const Tensor& self, const Tensor& g) {
    const Tensor& w = self.node()->parents[0];
    const Tensor& y = self.node()->parents[1];
    return std::vector<Tensor>{outer(y, g), matvec(w, g)};
  });
}

Tensor outer(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1)
    fail("outer", "expects 1-D inputs, got " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t r = a.size(), c = b.size();
  std::vector<double> out(r * c);
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = av[i] * bv[j];
  return make_op({r, c}, std::move(out), {a, b}, [](const Tensor& self, const Tensor& g) {
    const Tensor& a = self.node()->parents[0];
    const Tensor& b = self.node()->parents[1];
    return std::vector<Tensor>{matvec(g, b), matvec_t(g, a)};
  });
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    fail("matmul", "expects 2-D inputs, got " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t ar = trans_a ? a.cols() : a.rows();
  const std::size_t ac = trans_a ? a.rows() : a.cols();
  const std::size_t br = trans_b ? b.cols() : b.rows();
  const std::size_t bc = trans_b ? b.rows() : b.cols();
  if (ac != br)
    fail("matmul", "incompatible shapes " + shape_str(a.shape()) + (trans_a ? "^T" : "") + " x " +
                       shape_str(b.shape()) + (trans_b ? "^T" : ""));

  const auto &av = a.values(), &bv = b.values();
  const std::size_t a_rs = a.cols(), b_rs = b.cols();  // row strides
  auto a_at = [&](std::size_t i, std::size_t k) { return trans_a ? av[k * a_rs + i] : av[i * a_rs + k]; };
  auto b_at = [&](std::size_t k, std::size_t j) { return trans_b ? bv[j * b_rs + k] : bv[k * b_rs + j]; };

  std::vector<double> out(ar * bc, 0.0);
  for (std::size_t i = 0; i < ar; ++i)
    for (std::size_t k = 0; k < ac; ++k) {
      const double aik = a_at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < bc; ++j) out[i * bc + j] += aik * b_at(k, j);
    }
  return make_op({ar, bc}, std::move(out), {a, b},
                 [trans_a, trans_b](const Tensor& self, const Tensor& g) {
                   const Tensor& a = self.node()->parents[0];
                   const Tensor& b = self.node()->parents[1];
                   Tensor da = trans_a ? matmul(b, g, trans_b, true) : matmul(g, b, false, !trans_b);
                   Tensor db = trans_b ? matmul(g, a, true, trans_a) : matmul(a, g, !trans_a, false);
                   return std::vector<Tensor>{da, db};
                 });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (m.shape().size() != 2 || v.shape().size() != 1 || m.cols() != v.size())
    fail("add_rowvec", "incompatible shapes " + shape_str(m.shape()) + " + " + shape_str(v.shape()));
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r * c);
  const auto &mv = m.values(), &vv = v.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = mv[i * c + j] + vv[j];
  return make_op({r, c}, std::move(out), {m, v}, [](const Tensor&, const Tensor& g) {
    return std::vector<Tensor>{g, sum_rows(g)};
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator-(const Tensor& a) { return neg(a); }

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

// ---- backward ----

bool Gradients::contains(const Tensor& t) const { return by_node_.count(t.node()) != 0; }

Tensor Gradients::grad(const Tensor& t) const {
  auto it = by_node_.find(t.node());
  if (it == by_node_.end()) return Tensor::zeros(t.shape());
  return it->second;
}

Gradients backward(const Tensor& loss, bool create_graph) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a defined scalar tensor");

  // Iterative post-order over the grad-tracked subgraph.
  std::vector<Tensor> topo;
  std::unordered_set<const TensorNode*> visited;
  struct Frame {
    Tensor t;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  if (loss.requires_grad()) {
    stack.push_back({loss, 0});
    visited.insert(loss.node());
  }
  while (!stack.empty()) {
    Tensor t = stack.back().t;
    std::size_t idx = stack.back().next_parent;
    const auto& parents = t.node()->parents;
    if (idx < parents.size()) {
      stack.back().next_parent = idx + 1;
      Tensor p = parents[idx];
      if (p.requires_grad() && !visited.count(p.node())) {
        visited.insert(p.node());
        stack.push_back({std::move(p), 0});
      }
    } else {
      topo.push_back(std::move(t));
      stack.pop_back();
    }
  }

  Gradients result;
  auto& grads = result.by_node_;
  grads[loss.node()] = Tensor::full({1}, 1.0);

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const Tensor& t = *it;
    auto git = grads.find(t.node());
    if (git == grads.end()) continue;  // unreached branch
    if (!t.node()->backward) continue;  // leaf
    Tensor upstream = git->second;
    std::vector<Tensor> parent_grads = t.node()->backward(t, upstream);
    const auto& parents = t.node()->parents;
    if (parent_grads.size() != parents.size())
      throw std::logic_error("backward: op returned wrong number of parent gradients");
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const Tensor& p = parents[i];
      if (!p.requires_grad()) continue;
      if (parent_grads[i].shape() != p.shape())
        throw std::logic_error("backward: gradient shape " + shape_str(parent_grads[i].shape()) +
                               " does not match parent " + shape_str(p.shape()));
      auto pit = grads.find(p.node());
      if (pit == grads.end())
        grads[p.node()] = parent_grads[i];
      else
        pit->second = add(pit->second, parent_grads[i]);
    }
  }

  if (!create_graph)
    for (auto& [node, g] : grads) g = g.detach();
  return result;
}

}  // namespace metapuck::ad
