#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "normest/common.hpp"
#include "normest/geometry.hpp"
#include "normest/jet.hpp"
#include "oracles.hpp"

using namespace normest;

namespace {

// Samples z = f(x,y) exactly on a jittered grid over [-1,1]^2.
std::vector<Vec3> poly_samples(const std::vector<double>& coeffs, int degree, int count,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double x = dist(rng), y = dist(rng);
    pts.emplace_back(x, y, oracles::poly_eval(coeffs, x, y, degree));
  }
  return pts;
}

std::vector<double> random_coeffs(int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> coeffs(static_cast<size_t>((degree + 1) * (degree + 2) / 2));
  for (double& c : coeffs) c = dist(rng);
  return coeffs;
}

}  // namespace

TEST_CASE("JetConfig term count and degree bounds") {
  CHECK(JetConfig(1).n_terms() == 3);
  CHECK(JetConfig(2).n_terms() == 6);
  CHECK(JetConfig(3).n_terms() == 10);
  CHECK(JetConfig(4).n_terms() == 15);
  CHECK_THROWS_AS(JetConfig(0), std::invalid_argument);
  CHECK_THROWS_AS(JetConfig(5), std::invalid_argument);
}

TEST_CASE("design matrix rows hold graded-lex monomials") {
  {
    Eigen::MatrixXd m = jet_design_matrix({Vec3(2, 3, 5)}, 1);
    REQUIRE(m.rows() == 1);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(0, 2) == 3.0);
  }
  {
    Eigen::MatrixXd m = jet_design_matrix({Vec3(1, 1, 0.5)}, 2);
    REQUIRE(m.cols() == 6);
    for (int c = 0; c < 6; ++c) CHECK(m(0, c) == 1.0);
  }
  {
    Eigen::MatrixXd m = jet_design_matrix({Vec3(2, 3, 0)}, 2);
    // 1, x, y, x^2, xy, y^2
    CHECK(m(0, 3) == 4.0);
    CHECK(m(0, 4) == 6.0);
    CHECK(m(0, 5) == 9.0);
  }
  CHECK(jet_design_matrix({Vec3(0, 0, 0)}, 3).cols() == 10);
}

TEST_CASE("fit recovers an exact paraboloid") {
  std::mt19937_64 rng(1);
  // z = x^2 + y^2 in graded-lex order: a00,a10,a01,a20,a11,a02.
  const std::vector<double> truth = {0, 0, 0, 1, 0, 1};
  const std::vector<Vec3> pts = poly_samples(truth, 2, 40, rng);
  const JetFit fit = fit_jet(pts, JetConfig(2));
  for (int i = 0; i < 6; ++i) {
    CHECK(fit.coeffs[i] == doctest::Approx(truth[static_cast<size_t>(i)]).epsilon(1e-9));
  }
  CHECK(fit.residual == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit recovers an exact plane") {
  std::mt19937_64 rng(2);
  const std::vector<double> truth = {0, 0.5, -0.25};
  const std::vector<Vec3> pts = poly_samples(truth, 1, 20, rng);
  const JetFit fit = fit_jet(pts, JetConfig(1));
  CHECK(fit.coeffs[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.coeffs[1] == doctest::Approx(0.5));
  CHECK(fit.coeffs[2] == doctest::Approx(-0.25));
}

TEST_CASE("jet_normal closed forms") {
  auto normal_for = [](double a10, double a01) {
    JetFit fit;
    fit.config = JetConfig(1);
    fit.coeffs = Eigen::Vector3d(0.0, a10, a01);
    return jet_normal(fit);
  };
  CHECK((normal_for(0, 0) - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((normal_for(1, 0) - Vec3(-1, 0, 1) / std::sqrt(2.0)).norm() < 1e-15);
  CHECK((normal_for(1, 1) - Vec3(-1, -1, 1) / std::sqrt(3.0)).norm() < 1e-15);
}

TEST_CASE("exactness across degrees and seeds") {
  std::mt19937_64 rng(99);
  for (int degree = 1; degree <= 4; ++degree) {
    const JetConfig config(degree);
    for (int trial = 0; trial < 25; ++trial) {
      const std::vector<double> truth = random_coeffs(degree, rng);
      const std::vector<Vec3> pts = poly_samples(truth, degree, 4 * config.n_terms(), rng);
      const JetFit fit = fit_jet(pts, config);

      double num = 0.0, den = 0.0;
      for (int i = 0; i < config.n_terms(); ++i) {
        const double d = fit.coeffs[i] - truth[static_cast<size_t>(i)];
        num += d * d;
        den += truth[static_cast<size_t>(i)] * truth[static_cast<size_t>(i)];
      }
      CHECK(std::sqrt(num) < 1e-9 * std::max(1.0, std::sqrt(den)));

      const Vec3 analytic =
          Vec3(-truth[1], -truth[2], 1.0).normalized();
      CHECK(unoriented_angle(jet_normal(fit), analytic) < 1e-6);
    }
  }
}

TEST_CASE("weighted fit matches the normal-equations oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> wdist(0.1, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int degree = 1 + trial % 3;
    const JetConfig config(degree);
    std::vector<double> truth = random_coeffs(degree, rng);
    std::vector<Vec3> pts = poly_samples(truth, degree, 50, rng);
    // Noise keeps the fit nontrivial: the solution is no longer the truth.
    std::normal_distribution<double> noise(0.0, 0.05);
    for (Vec3& p : pts) p.z() += noise(rng);
    std::vector<double> weights(pts.size());
    for (double& w : weights) w = wdist(rng);

    const JetFit fit = fit_jet(pts, weights, config);
    const std::vector<double> want = oracles::normal_equations_jet(pts, weights, degree);
    for (int i = 0; i < config.n_terms(); ++i) {
      const double rel = std::abs(fit.coeffs[i] - want[static_cast<size_t>(i)]) /
                         std::max(1.0, std::abs(want[static_cast<size_t>(i)]));
      CHECK(rel < 1e-8);
    }
  }
}

TEST_CASE("duplicating a point equals doubling its weight") {
  std::mt19937_64 rng(13);
  std::vector<double> truth = random_coeffs(2, rng);
  std::vector<Vec3> pts = poly_samples(truth, 2, 24, rng);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (Vec3& p : pts) p.z() += noise(rng);

  std::vector<double> weights(pts.size(), 1.0);
  weights[3] = 2.0;
  const JetFit doubled = fit_jet(pts, weights, JetConfig(2));

  std::vector<Vec3> dup = pts;
  dup.push_back(pts[3]);
  const JetFit duplicated = fit_jet(dup, JetConfig(2));

  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(doubled.coeffs[i] - duplicated.coeffs[i]) < 1e-10);
  }
}

TEST_CASE("zero weight removes a point from the fit") {
  std::mt19937_64 rng(17);
  std::vector<double> truth = random_coeffs(1, rng);
  std::vector<Vec3> pts = poly_samples(truth, 1, 12, rng);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (Vec3& p : pts) p.z() += noise(rng);
  // An outlier with zero weight must not influence the solution.
  std::vector<Vec3> with_outlier = pts;
  with_outlier.push_back(Vec3(0.1, -0.2, 100.0));
  std::vector<double> weights(with_outlier.size(), 1.0);
  weights.back() = 0.0;

  const JetFit base = fit_jet(pts, JetConfig(1));
  const JetFit masked = fit_jet(with_outlier, weights, JetConfig(1));
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(base.coeffs[i] - masked.coeffs[i]) < 1e-10);
  }
}

TEST_CASE("uniform scaling leaves the jet normal unchanged") {
  std::mt19937_64 rng(23);
  const std::vector<double> truth = random_coeffs(2, rng);
  const std::vector<Vec3> pts = poly_samples(truth, 2, 30, rng);
  std::vector<Vec3> scaled = pts;
  for (Vec3& p : scaled) p *= 7.5;

  const Vec3 a = jet_normal(fit_jet(pts, JetConfig(2)));
  const Vec3 b = jet_normal(fit_jet(scaled, JetConfig(2)));
  CHECK(unoriented_angle(a, b) < 1e-9);
}

TEST_CASE("residual reports the weighted squared error") {
  std::vector<Vec3> pts = {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {-1, 0, 0}, {0, -1, 1}};
  std::vector<double> weights = {1, 2, 1, 1, 1, 0.5};
  const JetFit fit = fit_jet(pts, weights, JetConfig(1));
  double want = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const double pred = fit.coeffs[0] + fit.coeffs[1] * pts[i].x() + fit.coeffs[2] * pts[i].y();
    const double r = pred - pts[i].z();
    want += weights[i] * r * r;
  }
  CHECK(fit.residual == doctest::Approx(want).epsilon(1e-12));
  CHECK(fit.condition >= 1.0);
}

TEST_CASE("fit rejects bad inputs") {
  std::mt19937_64 rng(29);
  std::vector<Vec3> pts = poly_samples(random_coeffs(2, rng), 2, 10, rng);

  std::vector<double> short_weights(pts.size() - 1, 1.0);
  CHECK_THROWS_AS(fit_jet(pts, short_weights, JetConfig(2)), std::invalid_argument);

  std::vector<double> negative(pts.size(), 1.0);
  negative[0] = -0.5;
  CHECK_THROWS_AS(fit_jet(pts, negative, JetConfig(2)), std::invalid_argument);

  // Fewer active points than terms.
  std::vector<double> sparse(pts.size(), 0.0);
  sparse[0] = sparse[1] = sparse[2] = 1.0;
  CHECK_THROWS_AS(fit_jet(pts, sparse, JetConfig(2)), std::invalid_argument);

  // Collinear points make the system rank-deficient.
  std::vector<Vec3> line;
  for (int i = 0; i < 12; ++i) line.emplace_back(i * 0.1, i * 0.1, 0.0);
  CHECK_THROWS_AS(fit_jet(line, JetConfig(2)), NumericError);
}

TEST_CASE("pca_normal on exact planes") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  std::vector<Vec3> flat;
  for (int i = 0; i < 50; ++i) flat.emplace_back(dist(rng), dist(rng), 0.0);
  CHECK((pca_normal(flat) - Vec3(0, 0, 1)).norm() < 1e-12);

  std::vector<Vec3> wall;
  for (int i = 0; i < 50; ++i) wall.emplace_back(0.0, dist(rng), dist(rng));
  const Vec3 n = pca_normal(wall);
  CHECK(std::abs(n.x()) == doctest::Approx(1.0));
  CHECK(std::abs(n.y()) < 1e-12);
  CHECK(std::abs(n.z()) < 1e-12);
}

TEST_CASE("pca_normal on a spherical cap stays within a degree of the pole") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> cap;
  for (int i = 0; i < 100; ++i) {
    const double polar = rad_from_deg(10.0) * std::sqrt(unit(rng));
    const double azimuth = 2.0 * kPi * unit(rng);
    cap.emplace_back(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                     std::cos(polar));
  }
  CHECK(unoriented_angle(pca_normal(cap), Vec3(0, 0, 1)) < 1.0);
}

TEST_CASE("pca_normal rejects degenerate point sets") {
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i * 1.0, 2.0 * i, -i * 1.0);
  CHECK_THROWS_AS(pca_normal(line), NumericError);
  CHECK_THROWS_AS(pca_normal({Vec3(0, 0, 0), Vec3(1, 1, 1)}), std::invalid_argument);
}
