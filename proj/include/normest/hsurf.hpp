#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "normest/common.hpp"
#include "normest/geometry.hpp"
#include "normest/tensor.hpp"

namespace normest {

// Network dimensions. The multi-scale transform processes the scales[s]
// points nearest the query at stage s; the position encoder and the fitting
// head operate on the encoded_points nearest the query.
struct ModelConfig {
  int patch_size = 64;              // points per patch (N)
  std::vector<int> scales = {64, 32, 16};
  int encoded_points = 16;          // M, defaults to N/4
  int k_local = 16;                 // kNN group size inside each scale
  int encode_k = 16;                // neighbors per point in the position encoder (K)
  int feature_dim = 32;             // width of every per-point feature (c)
  int dense_depth = 3;              // layers per dense block
  int dense_growth = 16;            // channels added by each dense layer
  int residual_blocks = 4;          // fitting-head depth (tau)
  int hidden = 64;                  // hidden width of residual blocks and output MLPs

  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  // Smallest config that still exercises every block; used by gradient checks.
  static ModelConfig tiny();
};

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [1, out]
};

// DenseNet-style block: each layer maps the running concatenation to `growth`
// new channels, then `proj` maps the final concatenation back down.
struct DenseBlockParams {
  std::vector<Linear> layers;
  Linear proj;
};

struct ScaleParams {
  DenseBlockParams local;  // aggregation over kNN groups, input width 2c
  Linear shift_v;          // c -> c, applied to the pooled global feature
  Linear shift_u;          // 2c -> c, fuses global feature into per-point rows
};

struct ResidualBlockParams {
  Linear fc1;  // c -> hidden
  Linear fc2;  // hidden -> c
};

struct HSurfParams {
  Linear encoder_e;    // 3 -> c
  Linear encoder_phi;  // 3+c -> c
  Linear input_conv;   // 3 -> c
  std::vector<ScaleParams> scales;
  Linear hyper_in;     // 2c -> c
  std::vector<ResidualBlockParams> blocks;
  Linear out_psi1;     // c -> hidden
  Linear out_psi2;     // hidden -> 1
  Linear out_h1;       // c -> hidden
  Linear out_h2;       // hidden -> 3

  // Visits every tensor in a fixed order with a stable dotted name. The order
  // defines the checkpoint layout and the optimizer state alignment.
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
  std::vector<std::pair<std::string, Tensor>> named_tensors();
  long long parameter_count();
  HSurfParams clone();
};

// Expected tensor-entry total for a config; tested against the live params.
long long expected_parameter_count(const ModelConfig& config);

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
HSurfParams init_params(const ModelConfig& config, unsigned long long seed);

// Condition code: per encoded point, relative offsets to its K nearest patch
// neighbors pass through encoder_e, are concatenated with the raw offsets,
// pass through encoder_phi, and max-pool over the K neighbors. Returns [M, c].
Tensor encode_positions(Graph& g, const Patch& patch, HSurfParams& params,
                        const ModelConfig& config);

// Global location code: per-point input features alternate through local
// aggregation (kNN grouping + dense block + group max-pool) and a global
// shift (pooled feature through shift_v, fused per point through shift_u),
// narrowing the active set to the next scale's nearest points each stage.
// Returns [M, c] rows for the encoded points.
Tensor space_transform(Graph& g, const Patch& patch, HSurfParams& params,
                       const ModelConfig& config);

// Fitting head: projects [G : C] to width c, then applies the residual blocks
// x + fc2(relu(fc1(x))). Returns [M, c].
Tensor hyper_fit(Graph& g, const Tensor& G, const Tensor& C, HSurfParams& params);

struct NormalOutput {
  Tensor normal;   // [3], unit length
  Tensor weights;  // [M, 1], each in (0,1)
};

// Weighted max-pool head: w_i = sigmoid(psi MLP), pooled = max_i(w_i * row_i),
// normal = h MLP of pooled, L2-normalized. Throws NumericError when the raw
// head output has norm < 1e-12.
NormalOutput output_normal(Graph& g, const Tensor& fitted, HSurfParams& params);

struct ForwardResult {
  Tensor normal;                     // [3], unit, in patch-local coordinates
  Tensor weights;                    // [M, 1]
  std::vector<int> encoded_indices;  // patch point index behind each row
};

// Full pass: position encoding and space transform feed the fitting head and
// the weighted max-pool output. encoded_indices lists the patch points the
// weight rows correspond to (the M nearest the query, by distance rank).
ForwardResult hsurf_forward(Graph& g, const Patch& patch, HSurfParams& params,
                            const ModelConfig& config);

}  // namespace normest
