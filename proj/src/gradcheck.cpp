#include "normest/gradcheck.hpp"

#include <random>
#include <sstream>

#include "normest/loss.hpp"
#include "normest/synth.hpp"
#include "normest/tensor.hpp"

namespace normest {

namespace {

// Weighted sum with a fixed random probe, so directional errors in any output
// coordinate cannot cancel against a plain sum.
Tensor scalarize(Graph& g, const Tensor& x, const Tensor& probe) {
  Tensor s = mul(g, x, probe);
  while (s.rank() > 0) s = sum_over_axis(g, s, s.rank() - 1);
  return s;
}

Tensor make_probe(const std::vector<int>& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.3, 1.0);
  long long n = 1;
  for (int d : shape) n *= d;
  std::vector<double> values(static_cast<size_t>(n));
  for (double& v : values) v = dist(rng);
  return Tensor::from(shape, std::move(values));
}

Tensor detach(const Tensor& t) {
  return Tensor::from(t.shape(), t.values());
}

std::vector<Tensor> select_params(HSurfParams& params,
                                  std::initializer_list<const char*> prefixes) {
  std::vector<Tensor> out;
  params.for_each([&](const std::string& name, Tensor& t) {
    for (const char* prefix : prefixes) {
      if (name.rfind(prefix, 0) == 0) {
        out.push_back(t);
        return;
      }
    }
  });
  return out;
}

}  // namespace

bool GradCheckReport::all_passed() const {
  if (entries.empty()) return false;
  for (const GradCheckEntry& e : entries) {
    if (!e.passed) return false;
  }
  return true;
}

GradCheckReport run_grad_suite(const ModelConfig& config, std::uint64_t seed, double h,
                               double threshold) {
  config.validate();
  std::mt19937_64 rng(seed);

  const SyntheticSurface surface = SyntheticSurface::random_quadric(rng);
  const PointCloud cloud = sample_surface(surface, std::max(4 * config.patch_size, 64), rng);
  const KdTree tree(cloud);
  const Patch patch = extract_patch(cloud, tree, 0, config.patch_size);
  const Vec3 n_gt = *patch.gt_normal_local;
  std::vector<Vec3> encoded(patch.local_points.begin(),
                            patch.local_points.begin() + config.encoded_points);

  HSurfParams params = init_params(config, seed + 1);
  // Finite differences cannot validate subgradients at relu kinks, and the
  // zero-bias init puts the query row (local origin) exactly on one. Jitter
  // every parameter so the check runs at a generic, differentiable point.
  {
    std::uniform_real_distribution<double> jitter(0.02, 0.1);
    std::bernoulli_distribution sign(0.5);
    params.for_each([&](const std::string&, Tensor& t) {
      for (long long i = 0; i < t.size(); ++i) {
        t.data()[i] += sign(rng) ? jitter(rng) : -jitter(rng);
      }
    });
  }
  const int m = config.encoded_points;
  const int c = config.feature_dim;
  const Tensor probe_mc = make_probe({m, c}, rng);
  const Tensor probe_m1 = make_probe({m, 1}, rng);
  const Tensor probe_3 = make_probe({3}, rng);

  // Frozen copies of intermediate features so each block is checked in isolation.
  Tensor g0, c0, fitted0;
  {
    Graph g;
    Tensor cond = encode_positions(g, patch, params, config);
    Tensor loc = space_transform(g, patch, params, config);
    Tensor fitted = hyper_fit(g, loc, cond, params);
    c0 = detach(cond);
    g0 = detach(loc);
    fitted0 = detach(fitted);
  }

  GradCheckReport report;
  report.threshold = threshold;
  auto add = [&](const std::string& name, double err) {
    report.entries.push_back(GradCheckEntry{name, err, err < threshold});
  };

  {
    std::vector<Tensor> leaves = select_params(params, {"encoder_"});
    add("encode_positions", grad_check_params(
                                [&](Graph& g) {
                                  return scalarize(g, encode_positions(g, patch, params, config),
                                                   probe_mc);
                                },
                                leaves, h));
  }
  {
    std::vector<Tensor> leaves = select_params(params, {"input_conv", "scale"});
    add("space_transform", grad_check_params(
                               [&](Graph& g) {
                                 return scalarize(g, space_transform(g, patch, params, config),
                                                  probe_mc);
                               },
                               leaves, h));
  }
  {
    std::vector<Tensor> leaves = select_params(params, {"hyper_in", "block"});
    add("hyper_fit", grad_check_params(
                         [&](Graph& g) {
                           return scalarize(g, hyper_fit(g, g0, c0, params), probe_mc);
                         },
                         leaves, h));
  }
  {
    std::vector<Tensor> leaves = select_params(params, {"out_"});
    add("output_normal", grad_check_params(
                             [&](Graph& g) {
                               return scalarize(g, output_normal(g, fitted0, params).normal,
                                                probe_3);
                             },
                             leaves, h));
    add("output_weights", grad_check_params(
                              [&](Graph& g) {
                                return scalarize(g, output_normal(g, fitted0, params).weights,
                                                 probe_m1);
                              },
                              leaves, h));
  }
  {
    const Tensor at = Tensor::vec3(0.3, -0.2, 0.9);
    add("sin_loss", grad_check(
                        [&](Graph& g, const Tensor& x) { return sin_loss(g, x, n_gt); }, at, h));
    add("mse_vector_loss",
        grad_check([&](Graph& g, const Tensor& x) { return mse_vector_loss(g, x, n_gt); }, at, h));
  }
  {
    std::vector<double> w0(static_cast<size_t>(m));
    std::uniform_real_distribution<double> unit(0.2, 0.8);
    for (double& v : w0) v = unit(rng);
    const Tensor at = Tensor::from({m, 1}, std::move(w0));
    add("weight_loss",
        grad_check([&](Graph& g, const Tensor& x) { return weight_loss(g, x, encoded, n_gt); },
                   at, h));
  }
  {
    std::vector<Tensor> leaves;
    params.for_each([&](const std::string&, Tensor& t) { leaves.push_back(t); });
    add("forward_total_loss",
        grad_check_params(
            [&](Graph& g) {
              ForwardResult fwd = hsurf_forward(g, patch, params, config);
              Tensor l1 = sin_loss(g, fwd.normal, n_gt);
              std::vector<Vec3> pts;
              pts.reserve(fwd.encoded_indices.size());
              for (int idx : fwd.encoded_indices) {
                pts.push_back(patch.local_points[static_cast<size_t>(idx)]);
              }
              Tensor l2 = weight_loss(g, fwd.weights, pts, n_gt);
              return total_loss(g, l1, l2, 0.1, 1.0);
            },
            leaves, h));
  }
  return report;
}

std::string format_grad_report(const GradCheckReport& report) {
  std::ostringstream out;
  for (const GradCheckEntry& e : report.entries) {
    out << (e.passed ? "pass" : "FAIL") << "  " << e.name << "  max_rel_err=" << e.max_rel_err
        << "\n";
  }
  out << (report.all_passed() ? "all gradient checks passed" : "gradient checks FAILED")
      << " (threshold " << report.threshold << ")\n";
  return out.str();
}

}  // namespace normest
