#include "normest/loss.hpp"

#include <cmath>

namespace normest {

namespace {

void check_unit(const Vec3& v, const char* where) {
  if (std::abs(v.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string(where) + ": ground-truth normal must be unit length");
  }
}

}  // namespace

Tensor sin_loss(Graph& g, const Tensor& n, const Vec3& n_gt) {
  check_unit(n_gt, "sin_loss");
  Tensor gt = Tensor::vec3(n_gt.x(), n_gt.y(), n_gt.z());
  return norm3(g, cross3(g, gt, n));
}

std::vector<double> weight_targets(const std::vector<Vec3>& points, const Vec3& n_gt) {
  check_unit(n_gt, "weight_targets");
  if (points.empty()) throw std::invalid_argument("weight_targets: empty point list");
  std::vector<double> d(points.size());
  double mean = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    const double dot = points[i].dot(n_gt);
    d[i] = dot * dot;
    mean += d[i];
  }
  mean /= static_cast<double>(points.size());
  const double delta = std::max(0.05 * 0.05, 0.3 * mean);
  std::vector<double> targets(points.size());
  for (size_t i = 0; i < points.size(); ++i) targets[i] = std::exp(-d[i] / delta);
  return targets;
}

Tensor weight_loss(Graph& g, const Tensor& weights, const std::vector<Vec3>& points,
                   const Vec3& n_gt) {
  const int m = static_cast<int>(points.size());
  if (weights.rank() != 2 || weights.dim(0) != m || weights.dim(1) != 1) {
    throw std::invalid_argument("weight_loss: weights must be [" + std::to_string(m) +
                                ",1], got " + shape_str(weights.shape()));
  }
  Tensor target = Tensor::from({m, 1}, weight_targets(points, n_gt));
  Tensor diff = add(g, weights, scale(g, target, -1.0));
  Tensor sq = mul(g, diff, diff);
  return scale(g, sum_over_axis(g, sum_over_axis(g, sq, 1), 0), 1.0 / m);
}

Tensor mse_vector_loss(Graph& g, const Tensor& n, const Vec3& n_gt) {
  if (n.rank() != 1 || n.dim(0) != 3) {
    throw std::invalid_argument("mse_vector_loss: prediction must be a 3-vector, got " +
                                shape_str(n.shape()));
  }
  check_unit(n_gt, "mse_vector_loss");
  Tensor gt = Tensor::vec3(n_gt.x(), n_gt.y(), n_gt.z());
  Tensor diff = add(g, n, scale(g, gt, -1.0));
  return sum_over_axis(g, mul(g, diff, diff), 0);
}

Tensor total_loss(Graph& g, const Tensor& l1, const Tensor& l2, double alpha1, double alpha2) {
  if (alpha1 < 0.0 || alpha2 < 0.0) {
    throw std::invalid_argument("total_loss: loss weights must be >= 0");
  }
  return add(g, scale(g, l1, alpha1), scale(g, l2, alpha2));
}

}  // namespace normest
