#include "normest/jet.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace normest {

Eigen::MatrixXd jet_design_matrix(const std::vector<Vec3>& points, int degree) {
  JetConfig cfg(degree);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), cfg.n_terms());
  for (size_t i = 0; i < points.size(); ++i) {
    const double x = points[i].x();
    const double y = points[i].y();
    int col = 0;
    for (int d = 0; d <= degree; ++d) {
      // Terms of total degree d, x-power descending: x^d, x^(d-1) y, ..., y^d.
      for (int py = 0; py <= d; ++py) {
        m(static_cast<Eigen::Index>(i), col++) = std::pow(x, d - py) * std::pow(y, py);
      }
    }
  }
  return m;
}

JetFit fit_jet(const std::vector<Vec3>& points, const std::vector<double>& weights,
               const JetConfig& config) {
  if (points.size() != weights.size()) {
    throw std::invalid_argument("fit_jet: points and weights size mismatch");
  }
  int active = 0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("fit_jet: negative weight");
    if (w > 0.0) ++active;
  }
  if (active < config.n_terms()) {
    throw std::invalid_argument("fit_jet: need at least " + std::to_string(config.n_terms()) +
                                " positively weighted points, got " + std::to_string(active));
  }

  const Eigen::MatrixXd m = jet_design_matrix(points, config.degree);
  Eigen::VectorXd sw(static_cast<Eigen::Index>(points.size()));
  Eigen::VectorXd z(static_cast<Eigen::Index>(points.size()));
  for (size_t i = 0; i < points.size(); ++i) {
    sw[static_cast<Eigen::Index>(i)] = std::sqrt(weights[i]);
    z[static_cast<Eigen::Index>(i)] = points[i].z();
  }
  const Eigen::MatrixXd a = sw.asDiagonal() * m;
  const Eigen::VectorXd b = sw.cwiseProduct(z);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::VectorXd rdiag = qr.matrixR().diagonal().cwiseAbs();
  const double rmax = rdiag.maxCoeff();
  const double rmin = rdiag.minCoeff();
  const double condition = rmin > 0.0 ? rmax / rmin
                                      : std::numeric_limits<double>::infinity();
  if (!(condition <= 1e12)) {
    throw NumericError("fit_jet: rank-deficient system (condition estimate " +
                       std::to_string(condition) + ")");
  }

  JetFit fit;
  fit.config = config;
  fit.coeffs = qr.solve(b);
  fit.condition = condition;
  const Eigen::VectorXd r = m * fit.coeffs - z;
  for (size_t i = 0; i < points.size(); ++i) {
    const double ri = r[static_cast<Eigen::Index>(i)];
    fit.residual += weights[i] * ri * ri;
  }
  return fit;
}

JetFit fit_jet(const std::vector<Vec3>& points, const JetConfig& config) {
  return fit_jet(points, std::vector<double>(points.size(), 1.0), config);
}

Vec3 jet_normal(const JetFit& fit) {
  const double a10 = fit.coeffs[1];
  const double a01 = fit.coeffs[2];
  Vec3 n(-a10, -a01, 1.0);
  return n / n.norm();
}

Vec3 pca_normal(const std::vector<Vec3>& points) {
  if (points.size() < 3) {
    throw std::invalid_argument("pca_normal: need at least 3 points");
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 evals = es.eigenvalues();  // ascending
  if (evals[1] <= 1e-12 * evals[2]) {
    throw NumericError("pca_normal: degenerate patch (points nearly collinear)");
  }
  Vec3 n = es.eigenvectors().col(0);
  if (n.z() < 0.0) n = -n;
  return n;
}

}  // namespace normest
