#pragma once

// Independent reference implementations the tests compare against. These must
// not share code paths with the library: kNN is an exhaustive scan, and the
// least-squares oracle assembles normal equations and solves them with plain
// Gaussian elimination instead of the QR route used by fit_jet.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "normest/geometry.hpp"

namespace oracles {

inline std::vector<normest::Neighbor> brute_force_knn(const std::vector<normest::Vec3>& points,
                                                      const normest::Vec3& query, int k) {
  std::vector<std::pair<double, int>> all;
  all.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    all.emplace_back((points[i] - query).squaredNorm(), static_cast<int>(i));
  }
  std::sort(all.begin(), all.end());
  const size_t want = std::min(static_cast<size_t>(k), all.size());
  std::vector<normest::Neighbor> out;
  out.reserve(want);
  for (size_t i = 0; i < want; ++i) {
    out.push_back(normest::Neighbor{all[i].second, std::sqrt(all[i].first)});
  }
  return out;
}

// Monomial basis in the same graded-lex order the library uses:
// 1, x, y, x^2, xy, y^2, ...
inline std::vector<double> monomials(double x, double y, int degree) {
  std::vector<double> row;
  for (int d = 0; d <= degree; ++d) {
    for (int py = 0; py <= d; ++py) {
      row.push_back(std::pow(x, d - py) * std::pow(y, py));
    }
  }
  return row;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw std::runtime_error("solve_dense: singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
    x[ri] = s / a[ri][ri];
  }
  return x;
}

// Weighted polynomial fit via the normal equations M^T W M a = M^T W z.
inline std::vector<double> normal_equations_jet(const std::vector<normest::Vec3>& points,
                                                const std::vector<double>& weights, int degree) {
  const size_t terms = static_cast<size_t>((degree + 1) * (degree + 2) / 2);
  std::vector<std::vector<double>> ata(terms, std::vector<double>(terms, 0.0));
  std::vector<double> atb(terms, 0.0);
  for (size_t i = 0; i < points.size(); ++i) {
    const std::vector<double> row = monomials(points[i].x(), points[i].y(), degree);
    const double w = weights[i];
    for (size_t r = 0; r < terms; ++r) {
      for (size_t c = 0; c < terms; ++c) ata[r][c] += w * row[r] * row[c];
      atb[r] += w * row[r] * points[i].z();
    }
  }
  return solve_dense(std::move(ata), std::move(atb));
}

// Polynomial height field with coefficients in graded-lex order.
inline double poly_eval(const std::vector<double>& coeffs, double x, double y, int degree) {
  const std::vector<double> row = monomials(x, y, degree);
  double z = 0.0;
  for (size_t i = 0; i < row.size(); ++i) z += coeffs[i] * row[i];
  return z;
}

inline std::vector<normest::Vec3> random_cloud(std::mt19937_64& rng, int count, double extent) {
  std::uniform_real_distribution<double> dist(-extent, extent);
  std::vector<normest::Vec3> points;
  points.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    points.emplace_back(dist(rng), dist(rng), dist(rng));
  }
  return points;
}

}  // namespace oracles
