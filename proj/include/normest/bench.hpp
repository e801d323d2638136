#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "normest/common.hpp"
#include "normest/geometry.hpp"
#include "normest/hsurf.hpp"
#include "normest/jet.hpp"
#include "normest/synth.hpp"

namespace normest {

// A normal estimator evaluated per patch. estimate() returns a unit normal in
// patch-local coordinates and throws NumericError on failure; run_benchmark
// scores failures at the worst unoriented error instead of dropping them.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual Vec3 estimate(const Patch& patch) const = 0;
};

class PcaEstimator : public Estimator {
 public:
  std::string name() const override { return "pca"; }
  Vec3 estimate(const Patch& patch) const override;
};

class JetEstimator : public Estimator {
 public:
  explicit JetEstimator(int degree) : config_(degree) {}
  std::string name() const override { return "jet:" + std::to_string(config_.degree); }
  Vec3 estimate(const Patch& patch) const override;

 private:
  JetConfig config_;
};

class HsurfEstimator : public Estimator {
 public:
  HsurfEstimator(ModelConfig config, HSurfParams params);
  std::string name() const override { return "hsurf"; }
  Vec3 estimate(const Patch& patch) const override;
  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  mutable HSurfParams params_;  // tensors are read-shared across forward passes
};

// "pca", "jet:<n>", or "hsurf" (the last requires trained parameters).
std::unique_ptr<Estimator> make_estimator(const std::string& spec,
                                          const ModelConfig* hsurf_config,
                                          HSurfParams* hsurf_params);

struct BenchCase {
  std::string method;
  Corruption corruption;
  std::vector<double> errors_deg;  // one per evaluated query, failures at 90
  int failures = 0;
  double rmse_deg = 0.0;
  std::vector<double> pgp;
  double auc = 0.0;
};

struct BenchReport {
  std::vector<double> thresholds_deg;
  std::vector<BenchCase> cases;  // corruption-major, estimator-minor order
};

struct BenchOptions {
  int queries_per_cloud = 100;
  int patch_size = 64;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Corrupts the clean clouds once per corruption level, samples query points,
// extracts each patch once and scores every estimator on it. Deterministic
// for a fixed seed at any thread count; clouds must carry ground-truth normals.
BenchReport run_benchmark(const std::vector<const Estimator*>& estimators,
                          const std::vector<PointCloud>& clean_clouds,
                          const std::vector<Corruption>& corruptions,
                          const BenchOptions& options);

// Aligned RMSE/AUC/failure table, one row per case.
std::string format_report_table(const BenchReport& report);

}  // namespace normest
