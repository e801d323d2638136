#include "normest/tensor.hpp"

#include "normest/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

namespace normest {

namespace {

long long shape_product(const std::vector<int>& shape) {
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape must have positive dims, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

// Stride of one step along `axis`, and the number of outer/inner repetitions.
struct AxisSplit {
  long long outer;
  long long axis_len;
  long long inner;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis) {
  AxisSplit s{1, shape[static_cast<size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) s.outer *= shape[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i)
    s.inner *= shape[i];
  return s;
}

void check_axis(const char* op, const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank()) {
    throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(x.shape()));
  }
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, bool requires_grad)
    : d_(std::make_shared<detail::TensorData>()) {
  long long n = shape_product(shape);
  d_->shape = std::move(shape);
  d_->data.assign(static_cast<size_t>(n), 0.0);
  d_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return Tensor(std::move(shape), requires_grad);
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  long long n = shape_product(shape);
  if (n != static_cast<long long>(values.size())) {
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                " values for shape " + shape_str(shape));
  }
  Tensor t;
  t.d_->shape = std::move(shape);
  t.d_->data = std::move(values);
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({}, {v}, requires_grad);
}

Tensor Tensor::vec3(double x, double y, double z, bool requires_grad) {
  return from({3}, {x, y, z}, requires_grad);
}

std::vector<double>& Tensor::grad() {
  if (d_->grad.empty()) d_->grad.assign(d_->data.size(), 0.0);
  return d_->grad;
}

void Tensor::zero_grad() {
  std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

double Tensor::value() const {
  if (d_->data.size() != 1) {
    throw std::invalid_argument("Tensor::value: not a scalar, shape " + shape_str(d_->shape));
  }
  return d_->data[0];
}

double Tensor::at(int i, int j) const {
  return d_->data[static_cast<size_t>(i) * static_cast<size_t>(d_->shape[1]) +
                  static_cast<size_t>(j)];
}

bool Tensor::all_finite() const {
  for (double v : d_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::clone() const {
  Tensor t;
  t.d_->shape = d_->shape;
  t.d_->data = d_->data;
  t.d_->requires_grad = d_->requires_grad;
  return t;
}

void Graph::record(const char* op, std::vector<Tensor> inputs, Tensor output, BackwardFn back) {
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(back)});
}

void Graph::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, shape " +
                                shape_str(loss.shape()));
  }
  Tensor seed = loss;
  seed.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->back) it->back();
  }
}

namespace {

bool any_requires_grad(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts)
    if (t->requires_grad()) return true;
  return false;
}

Tensor make_output(const std::vector<int>& shape, bool requires_grad) {
  Tensor t(shape, requires_grad);
  return t;
}

}  // namespace

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = make_output({m, n}, any_requires_grad({&a, &b}));
  using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  MatMap(out.data(), m, n).noalias() = ConstMatMap(a.data(), m, k) * ConstMatMap(b.data(), k, n);
  if (out.requires_grad()) {
    Tensor ta = a, tb = b, to = out;
    g.record("matmul", {a, b}, out, [ta, tb, to, m, k, n]() mutable {
      ConstMatMap go(to.grad().data(), m, n);
      if (ta.requires_grad()) {
        MatMap(ta.grad().data(), m, k).noalias() += go * ConstMatMap(tb.data(), k, n).transpose();
      }
      if (tb.requires_grad()) {
        MatMap(tb.grad().data(), k, n).noalias() += ConstMatMap(ta.data(), m, k).transpose() * go;
      }
    });
  }
  return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  const bool bias_row = a.rank() == 2 && b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == a.dim(1);
  if (!bias_row) check_same_shape("add", a, b);
  Tensor out = make_output(a.shape(), any_requires_grad({&a, &b}));
  const size_t n = static_cast<size_t>(a.size());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  if (bias_row) {
    const size_t cols = static_cast<size_t>(a.dim(1));
    for (size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i % cols];
  } else {
    for (size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  }
  if (out.requires_grad()) {
    Tensor ta = a, tb = b, to = out;
    g.record("add", {a, b}, out, [ta, tb, to, bias_row, n]() mutable {
      const double* go = to.grad().data();
      if (ta.requires_grad()) {
        double* ga = ta.grad().data();
        for (size_t i = 0; i < n; ++i) ga[i] += go[i];
      }
      if (tb.requires_grad()) {
        double* gb = tb.grad().data();
        if (bias_row) {
          const size_t cols = tb.grad().size();
          for (size_t i = 0; i < n; ++i) gb[i % cols] += go[i];
        } else {
          for (size_t i = 0; i < n; ++i) gb[i] += go[i];
        }
      }
    });
  }
  return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  const bool row_scale = a.rank() == 2 && b.rank() == 2 && b.dim(1) == 1 && b.dim(0) == a.dim(0);
  if (!row_scale) check_same_shape("mul", a, b);
  Tensor out = make_output(a.shape(), any_requires_grad({&a, &b}));
  const size_t n = static_cast<size_t>(a.size());
  const size_t cols = a.rank() == 2 ? static_cast<size_t>(a.dim(1)) : n;
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  if (row_scale) {
    for (size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i / cols];
  } else {
    for (size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  }
  if (out.requires_grad()) {
    Tensor ta = a, tb = b, to = out;
    g.record("mul", {a, b}, out, [ta, tb, to, row_scale, n, cols]() mutable {
      const double* go = to.grad().data();
      const double* pa2 = ta.data();
      const double* pb2 = tb.data();
      const bool ga_on = ta.requires_grad(), gb_on = tb.requires_grad();
      double* ga = ga_on ? ta.grad().data() : nullptr;
      double* gb = gb_on ? tb.grad().data() : nullptr;
      if (row_scale) {
        for (size_t i = 0; i < n; ++i) {
          if (ga_on) ga[i] += go[i] * pb2[i / cols];
          if (gb_on) gb[i / cols] += go[i] * pa2[i];
        }
      } else {
        for (size_t i = 0; i < n; ++i) {
          if (ga_on) ga[i] += go[i] * pb2[i];
          if (gb_on) gb[i] += go[i] * pa2[i];
        }
      }
    });
  }
  return out;
}

Tensor relu(Graph& g, const Tensor& x) {
  Tensor out = make_output(x.shape(), x.requires_grad());
  const size_t n = static_cast<size_t>(x.size());
  const double* px = x.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("relu", {x}, out, [tx, to, n]() mutable {
      const double* go = to.grad().data();
      const double* px2 = tx.data();
      double* gx = tx.grad().data();
      for (size_t i = 0; i < n; ++i)
        if (px2[i] > 0.0) gx[i] += go[i];
    });
  }
  return out;
}

Tensor sigmoid(Graph& g, const Tensor& x) {
  Tensor out = make_output(x.shape(), x.requires_grad());
  const size_t n = static_cast<size_t>(x.size());
  const double* px = x.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = 1.0 / (1.0 + std::exp(-px[i]));
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("sigmoid", {x}, out, [tx, to, n]() mutable {
      const double* go = to.grad().data();
      const double* py = to.data();
      double* gx = tx.grad().data();
      for (size_t i = 0; i < n; ++i) gx[i] += go[i] * py[i] * (1.0 - py[i]);
    });
  }
  return out;
}

Tensor concat(Graph& g, const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  check_axis("concat", xs[0], axis);
  const int rank = xs[0].rank();
  std::vector<int> out_shape = xs[0].shape();
  long long axis_total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != rank) {
      throw std::invalid_argument("concat: rank mismatch " + shape_str(xs[0].shape()) + " vs " +
                                  shape_str(t.shape()));
    }
    for (int d = 0; d < rank; ++d) {
      if (d != axis && t.dim(d) != out_shape[static_cast<size_t>(d)]) {
        throw std::invalid_argument("concat: shape mismatch off axis " + std::to_string(axis) +
                                    ": " + shape_str(xs[0].shape()) + " vs " +
                                    shape_str(t.shape()));
      }
    }
    axis_total += t.dim(axis);
  }
  out_shape[static_cast<size_t>(axis)] = static_cast<int>(axis_total);

  bool rg = false;
  for (const Tensor& t : xs) rg = rg || t.requires_grad();
  Tensor out = make_output(out_shape, rg);

  const AxisSplit so = split_axis(out_shape, axis);
  double* po = out.data();
  long long offset = 0;
  for (const Tensor& t : xs) {
    const AxisSplit st = split_axis(t.shape(), axis);
    const double* pt = t.data();
    for (long long o = 0; o < st.outer; ++o) {
      const double* src = pt + o * st.axis_len * st.inner;
      double* dst = po + (o * so.axis_len + offset) * so.inner;
      std::copy(src, src + st.axis_len * st.inner, dst);
    }
    offset += st.axis_len;
  }
  if (rg) {
    std::vector<Tensor> inputs = xs;
    Tensor to = out;
    g.record("concat", xs, out, [inputs, to, so, axis]() mutable {
      const double* go = to.grad().data();
      long long off = 0;
      for (Tensor& t : inputs) {
        const AxisSplit st = split_axis(t.shape(), axis);
        if (t.requires_grad()) {
          double* gt = t.grad().data();
          for (long long o = 0; o < st.outer; ++o) {
            const double* src = go + (o * so.axis_len + off) * so.inner;
            double* dst = gt + o * st.axis_len * st.inner;
            const long long count = st.axis_len * st.inner;
            for (long long i = 0; i < count; ++i) dst[i] += src[i];
          }
        }
        off += st.axis_len;
      }
    });
  }
  return out;
}

Tensor max_over_axis(Graph& g, const Tensor& x, int axis) {
  check_axis("max_over_axis", x, axis);
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<int> out_shape;
  for (int d = 0; d < x.rank(); ++d)
    if (d != axis) out_shape.push_back(x.dim(d));
  Tensor out = make_output(out_shape, x.requires_grad());

  auto argmax = std::make_shared<std::vector<long long>>(
      static_cast<size_t>(s.outer * s.inner));
  const double* px = x.data();
  double* po = out.data();
  for (long long o = 0; o < s.outer; ++o) {
    for (long long in = 0; in < s.inner; ++in) {
      long long best = 0;
      double bv = px[o * s.axis_len * s.inner + in];
      for (long long a = 1; a < s.axis_len; ++a) {
        const double v = px[(o * s.axis_len + a) * s.inner + in];
        if (v > bv) {  // strict: ties keep the lowest index
          bv = v;
          best = a;
        }
      }
      po[o * s.inner + in] = bv;
      (*argmax)[static_cast<size_t>(o * s.inner + in)] =
          (o * s.axis_len + best) * s.inner + in;
    }
  }
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("max_over_axis", {x}, out, [tx, to, argmax]() mutable {
      const double* go = to.grad().data();
      double* gx = tx.grad().data();
      for (size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += go[i];
    });
  }
  return out;
}

Tensor sum_over_axis(Graph& g, const Tensor& x, int axis) {
  check_axis("sum_over_axis", x, axis);
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<int> out_shape;
  for (int d = 0; d < x.rank(); ++d)
    if (d != axis) out_shape.push_back(x.dim(d));
  Tensor out = make_output(out_shape, x.requires_grad());
  const double* px = x.data();
  double* po = out.data();
  for (long long o = 0; o < s.outer; ++o) {
    for (long long a = 0; a < s.axis_len; ++a) {
      const double* row = px + (o * s.axis_len + a) * s.inner;
      double* dst = po + o * s.inner;
      for (long long in = 0; in < s.inner; ++in) dst[in] += row[in];
    }
  }
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("sum_over_axis", {x}, out, [tx, to, s]() mutable {
      const double* go = to.grad().data();
      double* gx = tx.grad().data();
      for (long long o = 0; o < s.outer; ++o) {
        for (long long a = 0; a < s.axis_len; ++a) {
          double* row = gx + (o * s.axis_len + a) * s.inner;
          const double* src = go + o * s.inner;
          for (long long in = 0; in < s.inner; ++in) row[in] += src[in];
        }
      }
    });
  }
  return out;
}

Tensor scale(Graph& g, const Tensor& x, double sfac) {
  Tensor out = make_output(x.shape(), x.requires_grad());
  const size_t n = static_cast<size_t>(x.size());
  const double* px = x.data();
  double* po = out.data();
  for (size_t i = 0; i < n; ++i) po[i] = px[i] * sfac;
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("scale", {x}, out, [tx, to, sfac, n]() mutable {
      const double* go = to.grad().data();
      double* gx = tx.grad().data();
      for (size_t i = 0; i < n; ++i) gx[i] += sfac * go[i];
    });
  }
  return out;
}

Tensor l2_normalize(Graph& g, const Tensor& x, int axis) {
  check_axis("l2_normalize", x, axis);
  const AxisSplit s = split_axis(x.shape(), axis);
  Tensor out = make_output(x.shape(), x.requires_grad());
  const double* px = x.data();
  double* po = out.data();
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(s.outer * s.inner));
  for (long long o = 0; o < s.outer; ++o) {
    for (long long in = 0; in < s.inner; ++in) {
      double sq = 0.0;
      for (long long a = 0; a < s.axis_len; ++a) {
        const double v = px[(o * s.axis_len + a) * s.inner + in];
        sq += v * v;
      }
      const double nrm = std::sqrt(sq);
      if (nrm < 1e-12) {
        throw NumericError("l2_normalize: vector norm " + std::to_string(nrm) +
                           " below 1e-12 (division by zero)");
      }
      (*norms)[static_cast<size_t>(o * s.inner + in)] = nrm;
      for (long long a = 0; a < s.axis_len; ++a) {
        const long long idx = (o * s.axis_len + a) * s.inner + in;
        po[idx] = px[idx] / nrm;
      }
    }
  }
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("l2_normalize", {x}, out, [tx, to, s, norms]() mutable {
      const double* go = to.grad().data();
      const double* py = to.data();
      double* gx = tx.grad().data();
      for (long long o = 0; o < s.outer; ++o) {
        for (long long in = 0; in < s.inner; ++in) {
          const double nrm = (*norms)[static_cast<size_t>(o * s.inner + in)];
          double dot = 0.0;
          for (long long a = 0; a < s.axis_len; ++a) {
            const long long idx = (o * s.axis_len + a) * s.inner + in;
            dot += go[idx] * py[idx];
          }
          for (long long a = 0; a < s.axis_len; ++a) {
            const long long idx = (o * s.axis_len + a) * s.inner + in;
            gx[idx] += (go[idx] - py[idx] * dot) / nrm;
          }
        }
      }
    });
  }
  return out;
}

namespace {
void check_vec3(const char* op, const Tensor& t) {
  if (!(t.rank() == 1 && t.dim(0) == 3)) {
    throw std::invalid_argument(std::string(op) + ": expected shape [3], got " +
                                shape_str(t.shape()));
  }
}
}  // namespace

Tensor cross3(Graph& g, const Tensor& a, const Tensor& b) {
  check_vec3("cross3", a);
  check_vec3("cross3", b);
  Tensor out = make_output({3}, any_requires_grad({&a, &b}));
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  po[0] = pa[1] * pb[2] - pa[2] * pb[1];
  po[1] = pa[2] * pb[0] - pa[0] * pb[2];
  po[2] = pa[0] * pb[1] - pa[1] * pb[0];
  if (out.requires_grad()) {
    Tensor ta = a, tb = b, to = out;
    g.record("cross3", {a, b}, out, [ta, tb, to]() mutable {
      const double* go = to.grad().data();
      const double* pa2 = ta.data();
      const double* pb2 = tb.data();
      if (ta.requires_grad()) {
        // d/da (a x b) = -[b]_x  =>  dL/da = b x dL/dc
        double* ga = ta.grad().data();
        ga[0] += pb2[1] * go[2] - pb2[2] * go[1];
        ga[1] += pb2[2] * go[0] - pb2[0] * go[2];
        ga[2] += pb2[0] * go[1] - pb2[1] * go[0];
      }
      if (tb.requires_grad()) {
        // dL/db = dL/dc x a
        double* gb = tb.grad().data();
        gb[0] += go[1] * pa2[2] - go[2] * pa2[1];
        gb[1] += go[2] * pa2[0] - go[0] * pa2[2];
        gb[2] += go[0] * pa2[1] - go[1] * pa2[0];
      }
    });
  }
  return out;
}

Tensor norm3(Graph& g, const Tensor& x) {
  check_vec3("norm3", x);
  Tensor out = make_output({}, x.requires_grad());
  const double* px = x.data();
  const double nrm = std::sqrt(px[0] * px[0] + px[1] * px[1] + px[2] * px[2]);
  out.data()[0] = nrm;
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("norm3", {x}, out, [tx, to, nrm]() mutable {
      // Subgradient 0 at the origin.
      if (nrm == 0.0) return;
      const double go = to.grad()[0];
      const double* px2 = tx.data();
      double* gx = tx.grad().data();
      for (int i = 0; i < 3; ++i) gx[i] += go * px2[i] / nrm;
    });
  }
  return out;
}

Tensor reshape(Graph& g, const Tensor& x, std::vector<int> shape) {
  long long n = 1;
  for (int d : shape) n *= d;
  if (n != x.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                shape_str(shape));
  }
  Tensor out = Tensor::from(std::move(shape), x.values(), x.requires_grad());
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    g.record("reshape", {x}, out, [tx, to]() mutable {
      const double* go = to.grad().data();
      double* gx = tx.grad().data();
      const size_t n2 = tx.grad().size();
      for (size_t i = 0; i < n2; ++i) gx[i] += go[i];
    });
  }
  return out;
}

Tensor gather_rows(Graph& g, const Tensor& x, const std::vector<int>& rows) {
  if (x.rank() != 2) {
    throw std::invalid_argument("gather_rows: expected rank-2 input, got " +
                                shape_str(x.shape()));
  }
  const int nrows = x.dim(0), cols = x.dim(1);
  for (int r : rows) {
    if (r < 0 || r >= nrows) {
      throw std::invalid_argument("gather_rows: row " + std::to_string(r) +
                                  " out of range for shape " + shape_str(x.shape()));
    }
  }
  Tensor out = make_output({static_cast<int>(rows.size()), cols}, x.requires_grad());
  const double* px = x.data();
  double* po = out.data();
  for (size_t i = 0; i < rows.size(); ++i) {
    const double* src = px + static_cast<size_t>(rows[i]) * cols;
    std::copy(src, src + cols, po + i * static_cast<size_t>(cols));
  }
  if (out.requires_grad()) {
    Tensor tx = x, to = out;
    auto idx = std::make_shared<std::vector<int>>(rows);
    g.record("gather_rows", {x}, out, [tx, to, idx, cols]() mutable {
      const double* go = to.grad().data();
      double* gx = tx.grad().data();
      for (size_t i = 0; i < idx->size(); ++i) {
        double* dst = gx + static_cast<size_t>((*idx)[i]) * cols;
        const double* src = go + i * static_cast<size_t>(cols);
        for (int j = 0; j < cols; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

double grad_check(const std::function<Tensor(Graph&, const Tensor&)>& f, const Tensor& point,
                  double h) {
  Tensor x = point.clone();
  x.set_requires_grad(true);
  std::vector<Tensor> leaves{x};
  auto wrapped = [&f, &x](Graph& g) { return f(g, x); };
  return grad_check_params(wrapped, leaves, h);
}

double grad_check_params(const std::function<Tensor(Graph&)>& f, std::span<Tensor> leaves,
                         double h) {
  // Analytic pass.
  std::vector<std::vector<double>> analytic;
  {
    for (Tensor& t : leaves) t.zero_grad();
    Graph g;
    Tensor loss = f(g);
    if (loss.size() != 1) {
      throw std::invalid_argument("grad_check: f must be scalar-valued, got shape " +
                                  shape_str(loss.shape()));
    }
    g.backward(loss);
    for (Tensor& t : leaves) analytic.push_back(t.grad());
  }
  // Central differences, one coordinate at a time.
  double max_err = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor& t = leaves[li];
    const long long n = t.size();
    for (long long i = 0; i < n; ++i) {
      const double saved = t.data()[i];
      t.data()[i] = saved + h;
      double fp;
      {
        Graph g;
        fp = f(g).value();
      }
      t.data()[i] = saved - h;
      double fm;
      {
        Graph g;
        fm = f(g).value();
      }
      t.data()[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double err =
          std::abs(analytic[li][static_cast<size_t>(i)] - numeric) / std::max(1.0, std::abs(numeric));
      if (std::isnan(err)) return err;
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace normest
