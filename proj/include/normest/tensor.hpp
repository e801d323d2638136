#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace normest {

namespace detail {
struct TensorData {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until touched by backward / accumulation
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major tensor of 64-bit reals. Handle type: copies share storage.
// Ops never mutate their inputs; only the optimizer writes parameter data.
class Tensor {
 public:
  Tensor() : d_(std::make_shared<detail::TensorData>()) {}
  explicit Tensor(std::vector<int> shape, bool requires_grad = false);

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor vec3(double x, double y, double z, bool requires_grad = false);

  const std::vector<int>& shape() const { return d_->shape; }
  int rank() const { return static_cast<int>(d_->shape.size()); }
  long long size() const { return static_cast<long long>(d_->data.size()); }
  int dim(int axis) const { return d_->shape[static_cast<size_t>(axis)]; }

  double* data() { return d_->data.data(); }
  const double* data() const { return d_->data.data(); }
  std::vector<double>& values() { return d_->data; }
  const std::vector<double>& values() const { return d_->data; }

  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool rg) { d_->requires_grad = rg; }

  // Gradient buffer, zero-filled on first access.
  std::vector<double>& grad();
  bool has_grad() const { return !d_->grad.empty(); }
  void zero_grad();

  double value() const;          // scalar tensors only
  double at(int i) const { return d_->data[static_cast<size_t>(i)]; }
  double at(int i, int j) const;

  bool same_storage(const Tensor& other) const { return d_.get() == other.d_.get(); }
  bool all_finite() const;
  Tensor clone() const;  // deep copy of data (grad not copied)

 private:
  std::shared_ptr<detail::TensorData> d_;
};

std::string shape_str(const std::vector<int>& shape);

// Tape of recorded operations. Append order is topological order; backward
// visits nodes exactly once in reverse. Single-owner, one graph per forward pass.
class Graph {
 public:
  using BackwardFn = std::function<void()>;

  void record(const char* op, std::vector<Tensor> inputs, Tensor output, BackwardFn back);
  size_t node_count() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
  // Gradients accumulate additively; callers zero leaf grads between uses.
  void backward(const Tensor& loss);

 private:
  struct Node {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
};

// --- Operations -------------------------------------------------------------
// Every op validates shapes up front and throws std::invalid_argument with the
// op name and offending shapes. A node is recorded iff any input requires grad.

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
// Elementwise; also accepts a rank-2 `a` with `b` of shape [1,C] (row bias).
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
// Elementwise; also accepts a rank-2 `a` with `b` of shape [R,1] (per-row scale).
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor relu(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);
Tensor concat(Graph& g, const std::vector<Tensor>& xs, int axis);
// Removes `axis`; ties broken by lowest index so backward routing is deterministic.
Tensor max_over_axis(Graph& g, const Tensor& x, int axis);
Tensor sum_over_axis(Graph& g, const Tensor& x, int axis);
Tensor scale(Graph& g, const Tensor& x, double s);
// Normalizes each slice along `axis` to unit Euclidean length.
Tensor l2_normalize(Graph& g, const Tensor& x, int axis);
Tensor cross3(Graph& g, const Tensor& a, const Tensor& b);
Tensor norm3(Graph& g, const Tensor& x);
// Same data, new shape (element count preserved).
Tensor reshape(Graph& g, const Tensor& x, std::vector<int> shape);
// Row gather on a rank-2 tensor; backward scatter-adds. Rows may repeat.
Tensor gather_rows(Graph& g, const Tensor& x, const std::vector<int>& rows);

// --- Finite-difference verification ------------------------------------------
// Max over coordinates of |analytic - central| / max(1, |central|), with
// central difference (f(x + h e_i) - f(x - h e_i)) / (2h). NaNs propagate.
double grad_check(const std::function<Tensor(Graph&, const Tensor&)>& f,
                  const Tensor& point, double h);

// Same check against a set of leaves perturbed one coordinate at a time
// (used to sweep every parameter tensor of a network block).
double grad_check_params(const std::function<Tensor(Graph&)>& f,
                         std::span<Tensor> leaves, double h);

}  // namespace normest
