#pragma once

#include <vector>

#include "normest/common.hpp"

namespace normest {

// All angle errors are unoriented, in degrees, in [0, 90].

double rmse(const std::vector<double>& errors_deg);

// Fraction of errors strictly below each threshold.
std::vector<double> pgp_curve(const std::vector<double>& errors_deg,
                              const std::vector<double>& thresholds_deg);

// Trapezoidal area under the PGP curve, normalized by the threshold span so a
// perfect estimator scores 1.
double pgp_auc(const std::vector<double>& pgp, const std::vector<double>& thresholds_deg);

// 1, 2, ..., 90 degrees.
std::vector<double> default_thresholds();

}  // namespace normest
