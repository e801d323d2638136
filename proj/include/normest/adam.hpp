#pragma once

#include <vector>

#include "normest/common.hpp"
#include "normest/tensor.hpp"

namespace normest {

// First/second moment buffers aligned one-to-one with a fixed parameter list.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long step = 0;

  static AdamState init(const std::vector<Tensor>& params);
  bool matches(const std::vector<Tensor>& params) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected update reading each parameter's accumulated gradient. Throws
// NumericError on a non-finite gradient before touching any parameter.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               const AdamConfig& config = {});

}  // namespace normest
