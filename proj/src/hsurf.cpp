#include "normest/hsurf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace normest {

void ModelConfig::validate() const {
  if (patch_size < 1 || encoded_points < 1 || k_local < 1 || encode_k < 1 ||
      feature_dim < 1 || dense_depth < 1 || dense_growth < 1 ||
      residual_blocks < 1 || hidden < 1) {
    throw std::invalid_argument("ModelConfig: all dimensions must be >= 1");
  }
  if (scales.empty() || scales.front() != patch_size) {
    throw std::invalid_argument("ModelConfig: scale set must start at patch_size");
  }
  for (size_t s = 1; s < scales.size(); ++s) {
    if (scales[s] >= scales[s - 1]) {
      throw std::invalid_argument("ModelConfig: scale set must be strictly decreasing");
    }
  }
  if (scales.back() < 1) throw std::invalid_argument("ModelConfig: scales must be >= 1");
  if (encoded_points > scales.back()) {
    throw std::invalid_argument("ModelConfig: encoded_points must not exceed the last scale");
  }
  if (encode_k > patch_size) {
    throw std::invalid_argument("ModelConfig: encode_k exceeds patch_size");
  }
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.patch_size = 16;
  cfg.scales = {16};
  cfg.encoded_points = 4;
  cfg.k_local = 4;
  cfg.encode_k = 8;
  cfg.feature_dim = 8;
  cfg.dense_depth = 2;
  cfg.dense_growth = 4;
  cfg.residual_blocks = 2;
  cfg.hidden = 8;
  return cfg;
}

void HSurfParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  auto visit = [&](const std::string& name, Linear& l) {
    fn(name + ".w", l.w);
    fn(name + ".b", l.b);
  };
  visit("encoder_e", encoder_e);
  visit("encoder_phi", encoder_phi);
  visit("input_conv", input_conv);
  for (size_t s = 0; s < scales.size(); ++s) {
    const std::string base = "scale" + std::to_string(s);
    for (size_t j = 0; j < scales[s].local.layers.size(); ++j) {
      visit(base + ".local.layer" + std::to_string(j), scales[s].local.layers[j]);
    }
    visit(base + ".local.proj", scales[s].local.proj);
    visit(base + ".shift_v", scales[s].shift_v);
    visit(base + ".shift_u", scales[s].shift_u);
  }
  visit("hyper_in", hyper_in);
  for (size_t t = 0; t < blocks.size(); ++t) {
    const std::string base = "block" + std::to_string(t);
    visit(base + ".fc1", blocks[t].fc1);
    visit(base + ".fc2", blocks[t].fc2);
  }
  visit("out_psi1", out_psi1);
  visit("out_psi2", out_psi2);
  visit("out_h1", out_h1);
  visit("out_h2", out_h2);
}

std::vector<std::pair<std::string, Tensor>> HSurfParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor>> out;
  for_each([&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

long long HSurfParams::parameter_count() {
  long long n = 0;
  for_each([&](const std::string&, Tensor& t) { n += t.size(); });
  return n;
}

HSurfParams HSurfParams::clone() {
  HSurfParams copy = *this;
  copy.for_each([](const std::string&, Tensor& t) { t = t.clone(); });
  return copy;
}

namespace {

long long linear_count(int in, int out) {
  return static_cast<long long>(in) * out + out;
}

}  // namespace

long long expected_parameter_count(const ModelConfig& config) {
  const int c = config.feature_dim;
  const int g = config.dense_growth;
  const int h = config.hidden;
  long long n = linear_count(3, c) + linear_count(3 + c, c) + linear_count(3, c);
  long long per_scale = 0;
  for (int j = 0; j < config.dense_depth; ++j) per_scale += linear_count(2 * c + j * g, g);
  per_scale += linear_count(2 * c + config.dense_depth * g, c);
  per_scale += linear_count(c, c) + linear_count(2 * c, c);
  n += per_scale * static_cast<long long>(config.scales.size());
  n += linear_count(2 * c, c);
  n += static_cast<long long>(config.residual_blocks) * (linear_count(c, h) + linear_count(h, c));
  n += linear_count(c, h) + linear_count(h, 1);
  n += linear_count(c, h) + linear_count(h, 3);
  return n;
}

namespace {

Linear make_linear(int in, int out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(static_cast<size_t>(in) * static_cast<size_t>(out));
  for (double& v : w) v = dist(rng);
  Linear l;
  l.w = Tensor::from({in, out}, std::move(w), true);
  l.b = Tensor::zeros({1, out}, true);
  return l;
}

Tensor linear(Graph& g, const Tensor& x, Linear& l) {
  return add(g, matmul(g, x, l.w), l.b);
}

// Patch point indices sorted by distance from the query (the local origin),
// ties broken by index. Patches from extract_patch arrive already sorted, so
// this is usually the identity, but forward outputs must not depend on the
// storage order of the input.
std::vector<int> distance_order(const Patch& patch) {
  std::vector<int> order(patch.local_points.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> d2(patch.local_points.size());
  for (size_t i = 0; i < patch.local_points.size(); ++i) {
    d2[i] = patch.local_points[i].squaredNorm();
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = d2[static_cast<size_t>(a)];
    const double db = d2[static_cast<size_t>(b)];
    return da < db || (da == db && a < b);
  });
  return order;
}

// k nearest of points[center] among points[0..count), by (squared distance,
// position) with the center itself included at distance zero.
std::vector<int> knn_in_prefix(const std::vector<Vec3>& points, int count, int center, int k) {
  std::vector<int> idx(static_cast<size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> d2(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    d2[static_cast<size_t>(i)] = (points[static_cast<size_t>(i)] -
                                  points[static_cast<size_t>(center)]).squaredNorm();
  }
  const auto cmp = [&](int a, int b) {
    const double da = d2[static_cast<size_t>(a)];
    const double db = d2[static_cast<size_t>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), cmp);
  idx.resize(static_cast<size_t>(k));
  return idx;
}

void check_patch(const Patch& patch, const ModelConfig& config, const char* where) {
  config.validate();
  if (static_cast<int>(patch.local_points.size()) != config.patch_size) {
    throw std::invalid_argument(std::string(where) + ": patch has " +
                                std::to_string(patch.local_points.size()) +
                                " points, config expects " +
                                std::to_string(config.patch_size));
  }
}

}  // namespace

HSurfParams init_params(const ModelConfig& config, unsigned long long seed) {
  config.validate();
  const int c = config.feature_dim;
  const int g = config.dense_growth;
  const int h = config.hidden;
  std::mt19937_64 rng(seed);

  HSurfParams p;
  p.encoder_e = make_linear(3, c, rng);
  p.encoder_phi = make_linear(3 + c, c, rng);
  p.input_conv = make_linear(3, c, rng);
  p.scales.reserve(config.scales.size());
  for (size_t s = 0; s < config.scales.size(); ++s) {
    ScaleParams sp;
    for (int j = 0; j < config.dense_depth; ++j) {
      sp.local.layers.push_back(make_linear(2 * c + j * g, g, rng));
    }
    sp.local.proj = make_linear(2 * c + config.dense_depth * g, c, rng);
    sp.shift_v = make_linear(c, c, rng);
    sp.shift_u = make_linear(2 * c, c, rng);
    p.scales.push_back(std::move(sp));
  }
  p.hyper_in = make_linear(2 * c, c, rng);
  p.blocks.reserve(static_cast<size_t>(config.residual_blocks));
  for (int t = 0; t < config.residual_blocks; ++t) {
    ResidualBlockParams rb;
    rb.fc1 = make_linear(c, h, rng);
    rb.fc2 = make_linear(h, c, rng);
    p.blocks.push_back(std::move(rb));
  }
  p.out_psi1 = make_linear(c, h, rng);
  p.out_psi2 = make_linear(h, 1, rng);
  p.out_h1 = make_linear(c, h, rng);
  p.out_h2 = make_linear(h, 3, rng);
  return p;
}

Tensor encode_positions(Graph& g, const Patch& patch, HSurfParams& params,
                        const ModelConfig& config) {
  check_patch(patch, config, "encode_positions");
  const int n = config.patch_size;
  const int m = config.encoded_points;
  const int k = config.encode_k;
  const int c = config.feature_dim;
  const std::vector<int> order = distance_order(patch);

  std::vector<double> offsets(static_cast<size_t>(m) * k * 3);
  for (int i = 0; i < m; ++i) {
    const Vec3& pi = patch.local_points[static_cast<size_t>(order[static_cast<size_t>(i)])];
    // Neighbors are searched over the whole patch, not just the encoded subset.
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> d2(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      d2[static_cast<size_t>(j)] = (patch.local_points[static_cast<size_t>(j)] - pi).squaredNorm();
    }
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
      const double da = d2[static_cast<size_t>(a)];
      const double db = d2[static_cast<size_t>(b)];
      return da < db || (da == db && a < b);
    });
    for (int j = 0; j < k; ++j) {
      const Vec3 off = patch.local_points[static_cast<size_t>(idx[static_cast<size_t>(j)])] - pi;
      const size_t row = (static_cast<size_t>(i) * k + static_cast<size_t>(j)) * 3;
      offsets[row + 0] = off.x();
      offsets[row + 1] = off.y();
      offsets[row + 2] = off.z();
    }
  }

  Tensor off = Tensor::from({m * k, 3}, std::move(offsets));
  Tensor e = relu(g, linear(g, off, params.encoder_e));
  Tensor fused = relu(g, linear(g, concat(g, {off, e}, 1), params.encoder_phi));
  return max_over_axis(g, reshape(g, fused, {m, k, c}), 1);
}

Tensor space_transform(Graph& g, const Patch& patch, HSurfParams& params,
                       const ModelConfig& config) {
  check_patch(patch, config, "space_transform");
  const int c = config.feature_dim;
  const std::vector<int> order = distance_order(patch);

  // Points in distance-rank order, so scale s is always the first scales[s] rows.
  std::vector<Vec3> ranked(patch.local_points.size());
  for (size_t r = 0; r < order.size(); ++r) {
    ranked[r] = patch.local_points[static_cast<size_t>(order[r])];
  }
  std::vector<double> coords(ranked.size() * 3);
  for (size_t r = 0; r < ranked.size(); ++r) {
    coords[r * 3 + 0] = ranked[r].x();
    coords[r * 3 + 1] = ranked[r].y();
    coords[r * 3 + 2] = ranked[r].z();
  }
  Tensor points = Tensor::from({config.patch_size, 3}, std::move(coords));
  Tensor feat = relu(g, linear(g, points, params.input_conv));

  const int n_scales = static_cast<int>(config.scales.size());
  for (int s = 0; s < n_scales; ++s) {
    const int ns = config.scales[static_cast<size_t>(s)];
    const int k = std::min(config.k_local, ns);
    ScaleParams& sp = params.scales[static_cast<size_t>(s)];

    std::vector<int> center_idx(static_cast<size_t>(ns) * k);
    std::vector<int> nbr_idx(static_cast<size_t>(ns) * k);
    for (int i = 0; i < ns; ++i) {
      const std::vector<int> nbrs = knn_in_prefix(ranked, ns, i, k);
      for (int j = 0; j < k; ++j) {
        center_idx[static_cast<size_t>(i) * k + j] = i;
        nbr_idx[static_cast<size_t>(i) * k + j] = nbrs[static_cast<size_t>(j)];
      }
    }

    Tensor centers = gather_rows(g, feat, center_idx);
    Tensor nbrs = gather_rows(g, feat, nbr_idx);
    Tensor rel = add(g, nbrs, scale(g, centers, -1.0));
    Tensor h = concat(g, {centers, rel}, 1);
    for (Linear& layer : sp.local.layers) {
      h = concat(g, {h, relu(g, linear(g, h, layer))}, 1);
    }
    h = relu(g, linear(g, h, sp.local.proj));
    Tensor agg = max_over_axis(g, reshape(g, h, {ns, k, c}), 1);

    Tensor pooled = reshape(g, max_over_axis(g, agg, 0), {1, c});
    Tensor v = relu(g, linear(g, pooled, sp.shift_v));
    const int n_next = s + 1 < n_scales ? config.scales[static_cast<size_t>(s) + 1]
                                        : config.encoded_points;
    std::vector<int> tile_idx(static_cast<size_t>(n_next), 0);
    std::vector<int> keep_idx(static_cast<size_t>(n_next));
    std::iota(keep_idx.begin(), keep_idx.end(), 0);
    Tensor fused = concat(g, {gather_rows(g, v, tile_idx), gather_rows(g, agg, keep_idx)}, 1);
    feat = relu(g, linear(g, fused, sp.shift_u));
  }
  return feat;
}

Tensor hyper_fit(Graph& g, const Tensor& G, const Tensor& C, HSurfParams& params) {
  if (G.shape() != C.shape() || G.rank() != 2) {
    throw std::invalid_argument("hyper_fit: G and C must be rank-2 with equal shapes, got " +
                                shape_str(G.shape()) + " and " + shape_str(C.shape()));
  }
  Tensor x = relu(g, linear(g, concat(g, {G, C}, 1), params.hyper_in));
  for (ResidualBlockParams& rb : params.blocks) {
    Tensor t = relu(g, linear(g, x, rb.fc1));
    x = add(g, x, linear(g, t, rb.fc2));
  }
  return x;
}

NormalOutput output_normal(Graph& g, const Tensor& fitted, HSurfParams& params) {
  if (fitted.rank() != 2) {
    throw std::invalid_argument("output_normal: fitted features must be rank-2, got " +
                                shape_str(fitted.shape()));
  }
  const int c = fitted.dim(1);
  Tensor w = sigmoid(g, linear(g, relu(g, linear(g, fitted, params.out_psi1)), params.out_psi2));
  Tensor pooled = reshape(g, max_over_axis(g, mul(g, fitted, w), 0), {1, c});
  Tensor raw = linear(g, relu(g, linear(g, pooled, params.out_h1)), params.out_h2);
  Tensor normal = l2_normalize(g, reshape(g, raw, {3}), 0);
  return NormalOutput{normal, w};
}

ForwardResult hsurf_forward(Graph& g, const Patch& patch, HSurfParams& params,
                            const ModelConfig& config) {
  Tensor C = encode_positions(g, patch, params, config);
  Tensor G = space_transform(g, patch, params, config);
  Tensor fitted = hyper_fit(g, G, C, params);
  NormalOutput out = output_normal(g, fitted, params);
  std::vector<int> order = distance_order(patch);
  order.resize(static_cast<size_t>(config.encoded_points));
  return ForwardResult{out.normal, out.weights, std::move(order)};
}

}  // namespace normest
