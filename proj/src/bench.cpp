#include "normest/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "normest/metrics.hpp"
#include "normest/tensor.hpp"

namespace normest {

Vec3 PcaEstimator::estimate(const Patch& patch) const {
  return pca_normal(patch.local_points);
}

Vec3 JetEstimator::estimate(const Patch& patch) const {
  return jet_normal(fit_jet(patch.local_points, config_));
}

HsurfEstimator::HsurfEstimator(ModelConfig config, HSurfParams params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
}

Vec3 HsurfEstimator::estimate(const Patch& patch) const {
  Graph g;
  ForwardResult fwd = hsurf_forward(g, patch, params_, config_);
  const std::vector<double>& n = fwd.normal.values();
  return Vec3(n[0], n[1], n[2]);
}

std::unique_ptr<Estimator> make_estimator(const std::string& spec,
                                          const ModelConfig* hsurf_config,
                                          HSurfParams* hsurf_params) {
  if (spec == "pca") return std::make_unique<PcaEstimator>();
  if (spec.rfind("jet:", 0) == 0) {
    int degree = 0;
    try {
      size_t used = 0;
      degree = std::stoi(spec.substr(4), &used);
      if (used != spec.size() - 4) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw std::invalid_argument("invalid jet method spec '" + spec + "' (expected jet:<n>)");
    }
    return std::make_unique<JetEstimator>(degree);
  }
  if (spec == "hsurf") {
    if (hsurf_config == nullptr || hsurf_params == nullptr) {
      throw std::invalid_argument("method 'hsurf' requires a checkpoint");
    }
    return std::make_unique<HsurfEstimator>(*hsurf_config, hsurf_params->clone());
  }
  throw std::invalid_argument("unknown method '" + spec + "' (expected pca, jet:<n>, or hsurf)");
}

namespace {

struct QueryTask {
  const Patch* patch = nullptr;  // null when patch extraction failed
};

void score_range(const std::vector<QueryTask>& tasks, const Estimator& estimator, size_t begin,
                 size_t end, std::vector<double>& errors, std::vector<int>& failed) {
  for (size_t i = begin; i < end; ++i) {
    if (tasks[i].patch == nullptr) {
      errors[i] = 90.0;
      failed[i] = 1;
      continue;
    }
    try {
      const Vec3 n = estimator.estimate(*tasks[i].patch);
      errors[i] = unoriented_angle(n, *tasks[i].patch->gt_normal_local);
      failed[i] = 0;
    } catch (const NumericError&) {
      errors[i] = 90.0;
      failed[i] = 1;
    }
  }
}

}  // namespace

BenchReport run_benchmark(const std::vector<const Estimator*>& estimators,
                          const std::vector<PointCloud>& clean_clouds,
                          const std::vector<Corruption>& corruptions,
                          const BenchOptions& options) {
  if (estimators.empty()) throw std::invalid_argument("run_benchmark: no estimators");
  if (clean_clouds.empty()) throw DataError("run_benchmark: no input clouds");
  if (corruptions.empty()) throw std::invalid_argument("run_benchmark: no corruption levels");
  if (options.queries_per_cloud < 1 || options.patch_size < 1) {
    throw std::invalid_argument("run_benchmark: queries and patch size must be >= 1");
  }
  const int threads = std::max(1, options.threads);
  for (const PointCloud& cloud : clean_clouds) {
    if (!cloud.has_normals()) throw DataError("run_benchmark: cloud without ground-truth normals");
  }

  BenchReport report;
  report.thresholds_deg = default_thresholds();

  for (size_t ci = 0; ci < corruptions.size(); ++ci) {
    // One corrupted copy per level, shared by all estimators.
    std::mt19937_64 rng(options.seed + ci);
    std::vector<Patch> patches;
    std::vector<QueryTask> tasks;
    for (const PointCloud& clean : clean_clouds) {
      const PointCloud cloud = apply_corruption(clean, corruptions[ci], rng);
      if (static_cast<int>(cloud.size()) < options.patch_size) {
        throw DataError("run_benchmark: corrupted cloud has " + std::to_string(cloud.size()) +
                        " points, need at least " + std::to_string(options.patch_size));
      }
      const KdTree tree(cloud);
      std::vector<int> all(cloud.size());
      std::iota(all.begin(), all.end(), 0);
      std::vector<int> chosen;
      const size_t want = std::min<size_t>(static_cast<size_t>(options.queries_per_cloud),
                                           all.size());
      std::sample(all.begin(), all.end(), std::back_inserter(chosen), want, rng);
      for (int q : chosen) {
        try {
          patches.push_back(extract_patch(cloud, tree, q, options.patch_size));
        } catch (const NumericError&) {
          patches.push_back(Patch{});  // placeholder; marked failed below
        }
      }
    }
    tasks.resize(patches.size());
    for (size_t i = 0; i < patches.size(); ++i) {
      tasks[i].patch = patches[i].local_points.empty() ? nullptr : &patches[i];
    }

    for (const Estimator* estimator : estimators) {
      BenchCase bc;
      bc.method = estimator->name();
      bc.corruption = corruptions[ci];
      bc.errors_deg.resize(tasks.size());
      std::vector<int> failed(tasks.size(), 0);

      if (threads == 1 || tasks.size() < 2) {
        score_range(tasks, *estimator, 0, tasks.size(), bc.errors_deg, failed);
      } else {
        const size_t n_workers = std::min<size_t>(static_cast<size_t>(threads), tasks.size());
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        const size_t chunk = (tasks.size() + n_workers - 1) / n_workers;
        for (size_t w = 0; w < n_workers; ++w) {
          const size_t begin = w * chunk;
          const size_t end = std::min(tasks.size(), begin + chunk);
          if (begin >= end) break;
          pool.emplace_back([&, begin, end] {
            score_range(tasks, *estimator, begin, end, bc.errors_deg, failed);
          });
        }
        for (std::thread& t : pool) t.join();
      }

      bc.failures = std::accumulate(failed.begin(), failed.end(), 0);
      bc.rmse_deg = rmse(bc.errors_deg);
      bc.pgp = pgp_curve(bc.errors_deg, report.thresholds_deg);
      bc.auc = pgp_auc(bc.pgp, report.thresholds_deg);
      report.cases.push_back(std::move(bc));
    }
  }
  return report;
}

std::string format_report_table(const BenchReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "method" << std::setw(10) << "sigma" << std::setw(10)
      << "density" << std::right << std::setw(12) << "rmse_deg" << std::setw(10) << "auc"
      << std::setw(10) << "failures" << std::setw(10) << "queries" << "\n";
  out << std::string(72, '-') << "\n";
  for (const BenchCase& bc : report.cases) {
    std::ostringstream sigma;
    sigma << bc.corruption.sigma;
    out << std::left << std::setw(10) << bc.method << std::setw(10) << sigma.str()
        << std::setw(10) << density_name(bc.corruption.density) << std::right << std::fixed
        << std::setprecision(4) << std::setw(12) << bc.rmse_deg << std::setw(10) << bc.auc
        << std::defaultfloat << std::setw(10) << bc.failures << std::setw(10)
        << bc.errors_deg.size() << "\n";
  }
  return out.str();
}

}  // namespace normest
