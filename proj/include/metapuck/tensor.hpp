#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace metapuck::ad {

class Tensor;
struct TensorNode;
class Gradients;

using Shape = std::vector<std::size_t>;

// Dense 64-bit real array participating in a reverse-mode computation graph.
// Value-semantic handle to an immutable node; ops on grad-tracked tensors
// record the graph. Backward functions are themselves built from these ops,
// so gradients can be differentiated again (needed for meta-gradients that
// flow through inner SGD updates).
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double fill, bool requires_grad = false);
  static Tensor parameter(Shape shape, std::vector<double> values);  // grad-tracked leaf

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only
  bool is_scalar() const { return size() == 1; }

  const std::vector<double>& values() const;
  double value() const;  // scalar tensors
  double at(std::size_t i) const;
  bool requires_grad() const;

  // In-place access for optimizers and checkpoint loading only. Graphs built
  // from this tensor before the mutation become stale; callers rebuild.
  std::vector<double>& values_mut();

  // Constant copy of the values, detached from the graph.
  Tensor detach() const;

  const TensorNode* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<TensorNode> node_;

  friend struct TensorNode;
  friend Tensor make_op(Shape, std::vector<double>, std::vector<Tensor>,
                        std::function<std::vector<Tensor>(const Tensor&, const Tensor&)>);
  friend class Gradients;
  friend Gradients backward(const Tensor&, bool);
};

struct TensorNode {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<Tensor> parents;
  // Maps (self, upstream gradient) to per-parent gradient contributions.
  // Closures capture plain data only (never Tensors), so graph teardown
  // stays iterative.
  std::function<std::vector<Tensor>(const Tensor& self, const Tensor& upstream)> backward;

  ~TensorNode();
};

// Result of one backward pass: gradient tensor per reached graph node.
class Gradients {
 public:
  bool contains(const Tensor& t) const;
  // Gradient of the loss w.r.t. t; zeros when the loss does not depend on it.
  Tensor grad(const Tensor& t) const;

 private:
  friend Gradients backward(const Tensor& loss, bool create_graph);
  std::unordered_map<const TensorNode*, Tensor> by_node_;
};

// Reverse-mode sweep from a scalar loss. With create_graph the returned
// gradients stay differentiable w.r.t. everything upstream.
Gradients backward(const Tensor& loss, bool create_graph = false);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor minimum(const Tensor& a, const Tensor& b);

// ---- reductions / broadcasts ----
Tensor sum(const Tensor& a);                        // -> scalar
Tensor mean(const Tensor& a);                       // -> scalar
Tensor scale(const Tensor& s, const Tensor& x);     // scalar s times x
Tensor sum_rows(const Tensor& m);                   // (r,c) -> (c,), sums over rows
Tensor broadcast_rows(const Tensor& v, std::size_t rows);  // (c,) -> (r,c)

// ---- linear algebra ----
Tensor matvec(const Tensor& w, const Tensor& x);    // (r,c)x(c,) -> (r,)
Tensor matvec_t(const Tensor& w, const Tensor& y);  // w^T y: (r,c)x(r,) -> (c,)
Tensor outer(const Tensor& a, const Tensor& b);     // (r,)x(c,) -> (r,c)
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // adds v to every row of m

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);

Tensor dot(const Tensor& a, const Tensor& b);  // sum(a*b)

std::string shape_str(const Shape& s);

}  // namespace metapuck::ad
