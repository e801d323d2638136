#include "normest/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace normest {

namespace {

void check_errors(const std::vector<double>& errors_deg, const char* where) {
  if (errors_deg.empty()) throw std::invalid_argument(std::string(where) + ": empty error list");
  for (double e : errors_deg) {
    if (!(e >= 0.0 && e <= 90.0)) {
      throw std::invalid_argument(std::string(where) + ": error " + std::to_string(e) +
                                  " outside [0, 90] degrees");
    }
  }
}

}  // namespace

double rmse(const std::vector<double>& errors_deg) {
  check_errors(errors_deg, "rmse");
  double acc = 0.0;
  for (double e : errors_deg) acc += e * e;
  return std::sqrt(acc / static_cast<double>(errors_deg.size()));
}

std::vector<double> pgp_curve(const std::vector<double>& errors_deg,
                              const std::vector<double>& thresholds_deg) {
  check_errors(errors_deg, "pgp_curve");
  if (thresholds_deg.empty()) throw std::invalid_argument("pgp_curve: empty threshold list");
  for (size_t i = 1; i < thresholds_deg.size(); ++i) {
    if (thresholds_deg[i] <= thresholds_deg[i - 1]) {
      throw std::invalid_argument("pgp_curve: thresholds must be strictly increasing");
    }
  }
  std::vector<double> curve(thresholds_deg.size());
  for (size_t t = 0; t < thresholds_deg.size(); ++t) {
    size_t good = 0;
    for (double e : errors_deg) {
      if (e < thresholds_deg[t]) ++good;
    }
    curve[t] = static_cast<double>(good) / static_cast<double>(errors_deg.size());
  }
  return curve;
}

double pgp_auc(const std::vector<double>& pgp, const std::vector<double>& thresholds_deg) {
  if (pgp.size() != thresholds_deg.size()) {
    throw std::invalid_argument("pgp_auc: curve and threshold lengths differ");
  }
  if (pgp.size() < 2) throw std::invalid_argument("pgp_auc: need at least two thresholds");
  double area = 0.0;
  for (size_t i = 1; i < pgp.size(); ++i) {
    const double dt = thresholds_deg[i] - thresholds_deg[i - 1];
    if (dt <= 0.0) throw std::invalid_argument("pgp_auc: thresholds must be strictly increasing");
    area += 0.5 * (pgp[i] + pgp[i - 1]) * dt;
  }
  return area / (thresholds_deg.back() - thresholds_deg.front());
}

std::vector<double> default_thresholds() {
  std::vector<double> t(90);
  for (int i = 0; i < 90; ++i) t[static_cast<size_t>(i)] = static_cast<double>(i + 1);
  return t;
}

}  // namespace normest
