#include "normest/synth.hpp"

#include <cmath>

namespace normest {

SyntheticSurface SyntheticSurface::plane(double a, double b) {
  SyntheticSurface s;
  s.kind = Kind::Plane;
  s.a = a;
  s.b = b;
  return s;
}

SyntheticSurface SyntheticSurface::sphere(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("sphere: radius must be positive");
  SyntheticSurface s;
  s.kind = Kind::Sphere;
  s.r = radius;
  return s;
}

SyntheticSurface SyntheticSurface::quadric(double b20, double b11, double b02) {
  SyntheticSurface s;
  s.kind = Kind::Quadric;
  s.b20 = b20;
  s.b11 = b11;
  s.b02 = b02;
  return s;
}

SyntheticSurface SyntheticSurface::saddle(double s) {
  SyntheticSurface out;
  out.kind = Kind::Saddle;
  out.s = s;
  return out;
}

SyntheticSurface SyntheticSurface::random_quadric(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coeff(-1.5, 1.5);
  const double b20 = coeff(rng);
  const double b11 = coeff(rng);
  const double b02 = coeff(rng);
  return quadric(b20, b11, b02);
}

double SyntheticSurface::height(double x, double y) const {
  switch (kind) {
    case Kind::Plane: return a * x + b * y;
    case Kind::Quadric: return b20 * x * x + b11 * x * y + b02 * y * y;
    case Kind::Saddle: return s * (x * x - y * y);
    case Kind::Sphere: break;
  }
  throw std::invalid_argument("height: not a height-field surface");
}

Vec3 SyntheticSurface::normal_at(const Vec3& p) const {
  Vec3 n;
  switch (kind) {
    case Kind::Plane: n = Vec3(-a, -b, 1.0); break;
    case Kind::Sphere: {
      const double len = p.norm();
      if (len < 1e-12) throw std::invalid_argument("normal_at: sphere center has no normal");
      return p / len;
    }
    case Kind::Quadric:
      n = Vec3(-(2.0 * b20 * p.x() + b11 * p.y()), -(b11 * p.x() + 2.0 * b02 * p.y()), 1.0);
      break;
    case Kind::Saddle: n = Vec3(-2.0 * s * p.x(), 2.0 * s * p.y(), 1.0); break;
  }
  return n / n.norm();
}

std::string SyntheticSurface::name() const {
  switch (kind) {
    case Kind::Plane: return "plane";
    case Kind::Sphere: return "sphere";
    case Kind::Quadric: return "quadric";
    case Kind::Saddle: return "saddle";
  }
  return "unknown";
}

Corruption::Density density_from_name(const std::string& name) {
  if (name == "none") return Corruption::Density::None;
  if (name == "stripes") return Corruption::Density::Stripes;
  if (name == "gradient") return Corruption::Density::Gradient;
  throw std::invalid_argument("unknown density mode '" + name +
                              "' (expected none, stripes, or gradient)");
}

std::string density_name(Corruption::Density d) {
  switch (d) {
    case Corruption::Density::None: return "none";
    case Corruption::Density::Stripes: return "stripes";
    case Corruption::Density::Gradient: return "gradient";
  }
  return "unknown";
}

PointCloud sample_surface(const SyntheticSurface& surface, int count, std::mt19937_64& rng) {
  if (count < 1) throw std::invalid_argument("sample_surface: count must be >= 1");
  PointCloud cloud;
  cloud.points.reserve(static_cast<size_t>(count));
  cloud.normals.reserve(static_cast<size_t>(count));

  if (surface.kind == SyntheticSurface::Kind::Sphere) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
      Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
      double len = dir.norm();
      while (len < 1e-9) {
        dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
        len = dir.norm();
      }
      dir /= len;
      cloud.points.push_back(dir * surface.r);
      cloud.normals.push_back(dir);
    }
    return cloud;
  }

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const double x = unit(rng);
    const double y = unit(rng);
    const Vec3 p(x, y, surface.height(x, y));
    cloud.points.push_back(p);
    cloud.normals.push_back(surface.normal_at(p));
  }
  return cloud;
}

namespace {

double bbox_diagonal(const PointCloud& cloud) {
  Vec3 lo = cloud.points.front();
  Vec3 hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace

PointCloud apply_corruption(const PointCloud& cloud, const Corruption& corruption,
                            std::mt19937_64& rng) {
  if (corruption.sigma < 0.0) throw std::invalid_argument("apply_corruption: sigma must be >= 0");
  if (cloud.points.empty()) throw std::invalid_argument("apply_corruption: empty cloud");

  // Thin first so the noise draw count matches the surviving points.
  PointCloud kept;
  switch (corruption.density) {
    case Corruption::Density::None:
      kept = cloud;
      break;
    case Corruption::Density::Stripes: {
      // Drop four evenly spaced bands along x, each 10% of the extent wide.
      Vec3 lo = cloud.points.front();
      Vec3 hi = lo;
      for (const Vec3& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
      const double span = std::max(hi.x() - lo.x(), 1e-12);
      for (size_t i = 0; i < cloud.points.size(); ++i) {
        const double u = (cloud.points[i].x() - lo.x()) / span;  // in [0,1]
        const double band = std::fmod(u * 4.0, 1.0);
        if (band >= 0.45 && band < 0.55) continue;
        kept.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) kept.normals.push_back(cloud.normals[i]);
      }
      break;
    }
    case Corruption::Density::Gradient: {
      Vec3 lo = cloud.points.front();
      Vec3 hi = lo;
      for (const Vec3& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
      const double span = std::max(hi.x() - lo.x(), 1e-12);
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      for (size_t i = 0; i < cloud.points.size(); ++i) {
        const double u = (cloud.points[i].x() - lo.x()) / span;
        // Keep probability ramps from 1 down to 0.1 across the extent.
        if (coin(rng) > 1.0 - 0.9 * u) continue;
        kept.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) kept.normals.push_back(cloud.normals[i]);
      }
      break;
    }
  }
  if (kept.points.empty()) throw DataError("apply_corruption: density thinning removed all points");

  if (corruption.sigma > 0.0) {
    const double stddev = corruption.sigma * bbox_diagonal(kept);
    std::normal_distribution<double> gauss(0.0, stddev);
    for (Vec3& p : kept.points) {
      p.x() += gauss(rng);
      p.y() += gauss(rng);
      p.z() += gauss(rng);
    }
  }
  return kept;
}

std::vector<PointCloud> generate_dataset(const std::vector<SyntheticSurface>& surfaces,
                                         int samples_per_surface, const Corruption& corruption,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PointCloud> clouds;
  clouds.reserve(surfaces.size());
  for (const SyntheticSurface& s : surfaces) {
    PointCloud cloud = sample_surface(s, samples_per_surface, rng);
    clouds.push_back(apply_corruption(cloud, corruption, rng));
  }
  return clouds;
}

}  // namespace normest
