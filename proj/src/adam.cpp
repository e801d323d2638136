#include "normest/adam.hpp"

#include <cmath>

namespace normest {

AdamState AdamState::init(const std::vector<Tensor>& params) {
  AdamState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Tensor& p : params) {
    state.m.emplace_back(static_cast<size_t>(p.size()), 0.0);
    state.v.emplace_back(static_cast<size_t>(p.size()), 0.0);
  }
  return state;
}

bool AdamState::matches(const std::vector<Tensor>& params) const {
  if (m.size() != params.size() || v.size() != params.size()) return false;
  for (size_t i = 0; i < params.size(); ++i) {
    if (m[i].size() != static_cast<size_t>(params[i].size())) return false;
    if (v[i].size() != static_cast<size_t>(params[i].size())) return false;
  }
  return true;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               const AdamConfig& config) {
  if (!state.matches(params)) {
    throw std::invalid_argument("adam_step: state does not match parameter list");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");

  for (Tensor& p : params) {
    for (double gi : p.grad()) {
      if (!std::isfinite(gi)) {
        throw NumericError("adam_step: non-finite gradient, step rejected");
      }
    }
  }

  state.step += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    std::vector<double>& data = params[i].values();
    const std::vector<double>& grad = params[i].grad();
    std::vector<double>& mi = state.m[i];
    std::vector<double>& vi = state.v[i];
    for (size_t j = 0; j < data.size(); ++j) {
      const double gj = grad[j];
      mi[j] = config.beta1 * mi[j] + (1.0 - config.beta1) * gj;
      vi[j] = config.beta2 * vi[j] + (1.0 - config.beta2) * gj * gj;
      const double mhat = mi[j] / c1;
      const double vhat = vi[j] / c2;
      data[j] -= lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace normest
