#pragma once

#include <vector>

#include <Eigen/Dense>

#include "normest/common.hpp"
#include "normest/geometry.hpp"

namespace normest {

// Fitting a height field z = f(x, y) of total degree n over a local patch.
// Coefficients follow graded lexicographic order in (degree, x-power descending):
//   a00, a10, a01, a20, a11, a02, a30, ...
// so the normal at the origin is (-a10, -a01, 1) normalized.
struct JetConfig {
  int degree = 2;

  JetConfig() = default;
  explicit JetConfig(int n) : degree(n) {
    if (n < 1 || n > 4) {
      throw std::invalid_argument("jet degree must be in [1,4], got " + std::to_string(n));
    }
  }

  int n_terms() const { return (degree + 1) * (degree + 2) / 2; }
};

struct JetFit {
  JetConfig config;
  Eigen::VectorXd coeffs;      // n_terms() entries in the order above
  double residual = 0.0;       // sum_i w_i * (f(x_i, y_i) - z_i)^2
  double condition = 0.0;      // R-diagonal ratio estimate from the QR factor
};

// Row i is the monomial basis [1, x, y, x^2, xy, y^2, ...] at points[i].
Eigen::MatrixXd jet_design_matrix(const std::vector<Vec3>& points, int degree);

// Weighted least-squares fit via QR on diag(sqrt(w)) * M. Requires at least
// n_terms() points with positive weight and all weights >= 0; throws
// NumericError when the system is rank-deficient (condition > 1e12).
JetFit fit_jet(const std::vector<Vec3>& points, const std::vector<double>& weights,
               const JetConfig& config);

// Uniform-weight convenience overload.
JetFit fit_jet(const std::vector<Vec3>& points, const JetConfig& config);

// Unit normal of the fitted surface at the origin, z component positive.
Vec3 jet_normal(const JetFit& fit);

// Plane-fit normal: the eigenvector of the patch covariance with the smallest
// eigenvalue, oriented with positive z. Throws NumericError when the patch is
// degenerate (lambda_mid <= 1e-12 * lambda_max, i.e. points nearly collinear).
Vec3 pca_normal(const std::vector<Vec3>& points);

}  // namespace normest
