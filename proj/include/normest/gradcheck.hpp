#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "normest/hsurf.hpp"

namespace normest {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double threshold = 1e-4;
  bool all_passed() const;
};

// Finite-difference verification of every network block, both losses, and the
// composed forward pass, on a fixed random patch. h is the central-difference
// step; the pass threshold is on max relative error across all parameters.
GradCheckReport run_grad_suite(const ModelConfig& config, std::uint64_t seed, double h = 1e-6,
                               double threshold = 1e-4);

std::string format_grad_report(const GradCheckReport& report);

}  // namespace normest
