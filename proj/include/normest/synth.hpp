#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "normest/common.hpp"
#include "normest/geometry.hpp"

namespace normest {

// Analytic test surfaces sampled as height fields z = f(x,y) over [-1,1]^2,
// except the sphere, which is sampled uniformly over the full shell.
struct SyntheticSurface {
  enum class Kind { Plane, Sphere, Quadric, Saddle };

  Kind kind = Kind::Plane;
  // Plane: z = ax + by.  Quadric: z = b20 x^2 + b11 xy + b02 y^2.
  // Saddle: z = s (x^2 - y^2).  Sphere: radius r centered at the origin.
  double a = 0.0, b = 0.0;
  double b20 = 0.0, b11 = 0.0, b02 = 0.0;
  double s = 1.0;
  double r = 1.0;

  static SyntheticSurface plane(double a, double b);
  static SyntheticSurface sphere(double radius);
  static SyntheticSurface quadric(double b20, double b11, double b02);
  static SyntheticSurface saddle(double s);
  // Quadric with coefficients drawn uniformly from [-1.5, 1.5].
  static SyntheticSurface random_quadric(std::mt19937_64& rng);

  double height(double x, double y) const;        // height-field kinds only
  Vec3 normal_at(const Vec3& p) const;             // unit, consistent orientation
  std::string name() const;
};

struct Corruption {
  double sigma = 0.0;  // gaussian noise stddev as a fraction of the bbox diagonal
  enum class Density { None, Stripes, Gradient };
  Density density = Density::None;
};

Corruption::Density density_from_name(const std::string& name);
std::string density_name(Corruption::Density d);

// Samples `count` points with analytic ground-truth normals. Deterministic
// given the rng state; the rng is advanced.
PointCloud sample_surface(const SyntheticSurface& surface, int count, std::mt19937_64& rng);

// Applies gaussian position noise (normals untouched) and density thinning.
// Stripes drops points inside evenly spaced bands of the first coordinate;
// gradient keeps points with probability ramping linearly across the bbox.
PointCloud apply_corruption(const PointCloud& cloud, const Corruption& corruption,
                            std::mt19937_64& rng);

// One cloud per surface: sample, then corrupt. Seed fixes the whole batch.
std::vector<PointCloud> generate_dataset(const std::vector<SyntheticSurface>& surfaces,
                                         int samples_per_surface, const Corruption& corruption,
                                         std::uint64_t seed);

}  // namespace normest
