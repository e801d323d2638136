#pragma once

#include <vector>

#include "normest/common.hpp"
#include "normest/geometry.hpp"
#include "normest/tensor.hpp"

namespace normest {

// ‖n_gt × n‖: the sine of the unoriented angle between the two unit vectors.
// Differentiable w.r.t. n; n_gt enters as a constant.
Tensor sin_loss(Graph& g, const Tensor& n, const Vec3& n_gt);

// Per-point targets for the output-module weights: points close to the ground
// truth tangent plane should receive weight near 1. With d_i = (p_i . n_gt)^2,
// target_i = exp(-d_i / delta), delta = max(0.05^2, 0.3 * mean(d)).
std::vector<double> weight_targets(const std::vector<Vec3>& points, const Vec3& n_gt);

// Mean squared error between predicted weights ([M,1] tensor) and the targets
// computed from the corresponding patch points.
Tensor weight_loss(Graph& g, const Tensor& weights, const std::vector<Vec3>& points,
                   const Vec3& n_gt);

// Plain squared-distance loss ‖n - n_gt‖²; the ablation baseline that is
// sensitive to the sign of the ground truth.
Tensor mse_vector_loss(Graph& g, const Tensor& n, const Vec3& n_gt);

// alpha1 * sin_loss + alpha2 * weight_loss, already-built terms.
Tensor total_loss(Graph& g, const Tensor& l1, const Tensor& l2, double alpha1, double alpha2);

}  // namespace normest
