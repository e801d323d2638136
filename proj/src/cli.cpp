#include "normest/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "normest/bench.hpp"
#include "normest/gradcheck.hpp"
#include "normest/io.hpp"
#include "normest/metrics.hpp"
#include "normest/synth.hpp"
#include "normest/train.hpp"

namespace normest {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int default_threads() {
  const char* env = std::getenv("NORMEST_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used == std::strlen(env) && n >= 1) return n;
  } catch (const std::exception&) {
  }
  std::cerr << "warning: ignoring invalid NORMEST_THREADS value '" << env << "'\n";
  return 1;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  if (out.empty()) throw std::invalid_argument("empty list '" + s + "'");
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("config file '" + path + "': " + e.what());
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ModelConfig model_from_json(const json& j) {
  static const std::vector<std::string> known = {
      "patch_size",  "scales",       "encoded_points",  "k_local", "encode_k",
      "feature_dim", "dense_depth",  "dense_growth",    "residual_blocks", "hidden"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw DataError("unknown model config key '" + key + "'");
    }
  }
  ModelConfig mc;
  read_key(j, "patch_size", mc.patch_size);
  if (j.contains("scales")) {
    mc.scales = j.at("scales").get<std::vector<int>>();
  } else {
    mc.scales = {mc.patch_size, std::max(1, mc.patch_size / 2), std::max(1, mc.patch_size / 4)};
  }
  if (j.contains("encoded_points")) {
    mc.encoded_points = j.at("encoded_points").get<int>();
  } else {
    mc.encoded_points = std::max(1, mc.patch_size / 4);
  }
  read_key(j, "k_local", mc.k_local);
  read_key(j, "encode_k", mc.encode_k);
  mc.encode_k = std::min(mc.encode_k, mc.patch_size);
  read_key(j, "feature_dim", mc.feature_dim);
  read_key(j, "dense_depth", mc.dense_depth);
  read_key(j, "dense_growth", mc.dense_growth);
  read_key(j, "residual_blocks", mc.residual_blocks);
  read_key(j, "hidden", mc.hidden);
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid model config: ") + e.what());
  }
  return mc;
}

TrainConfig train_from_json(const json& j) {
  static const std::vector<std::string> known = {
      "alpha1",     "alpha2", "lr",     "decay_factor",      "decay_every",
      "batch_size", "epochs", "queries_per_shape", "seed",   "normal_loss"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw DataError("unknown train config key '" + key + "'");
    }
  }
  TrainConfig tc;
  read_key(j, "alpha1", tc.alpha1);
  read_key(j, "alpha2", tc.alpha2);
  read_key(j, "lr", tc.lr);
  read_key(j, "decay_factor", tc.decay_factor);
  read_key(j, "decay_every", tc.decay_every);
  read_key(j, "batch_size", tc.batch_size);
  read_key(j, "epochs", tc.epochs);
  read_key(j, "queries_per_shape", tc.queries_per_shape);
  read_key(j, "seed", tc.seed);
  if (j.contains("normal_loss")) {
    const std::string name = j.at("normal_loss").get<std::string>();
    if (name == "sin") {
      tc.normal_loss = TrainConfig::NormalLoss::Sin;
    } else if (name == "mse") {
      tc.normal_loss = TrainConfig::NormalLoss::Mse;
    } else {
      throw DataError("unknown normal_loss '" + name + "' (expected sin or mse)");
    }
  }
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid train config: ") + e.what());
  }
  return tc;
}

// Clouds from every .xyz in the directory, sorted by filename; ground-truth
// .normals siblings are attached when require_normals asks for them.
std::vector<PointCloud> load_cloud_dir(const std::string& dir, bool require_normals) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xyz") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .xyz files in '" + dir + "'");

  std::vector<PointCloud> clouds;
  clouds.reserve(files.size());
  for (const fs::path& f : files) {
    PointCloud cloud = load_xyz(f.string());
    fs::path normals = f;
    normals.replace_extension(".normals");
    if (fs::exists(normals)) {
      load_normals(normals.string(), cloud);
    } else if (require_normals) {
      throw DataError("missing ground-truth file '" + normals.string() + "'");
    }
    clouds.push_back(std::move(cloud));
  }
  return clouds;
}

struct SynthOptions {
  std::string shapes = "sphere:2,quadric:2";
  int samples = 2000;
  double sigma = 0.0;
  std::string density = "none";
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthOptions& opt) {
  Corruption corruption;
  corruption.sigma = opt.sigma;
  corruption.density = density_from_name(opt.density);
  if (opt.samples < 1) throw std::invalid_argument("--samples must be >= 1");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> slope(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  std::uniform_real_distribution<double> bend(0.5, 1.5);

  std::vector<SyntheticSurface> surfaces;
  std::vector<std::string> names;
  for (const std::string& part : split_list(opt.shapes)) {
    const size_t colon = part.find(':');
    const std::string kind = part.substr(0, colon);
    int count = 1;
    if (colon != std::string::npos) {
      try {
        size_t used = 0;
        count = std::stoi(part.substr(colon + 1), &used);
        if (used != part.size() - colon - 1 || count < 1) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad shape spec '" + part + "' (expected kind:count)");
      }
    }
    for (int i = 0; i < count; ++i) {
      if (kind == "plane") {
        const double a = slope(rng);
        const double b = slope(rng);
        surfaces.push_back(SyntheticSurface::plane(a, b));
      } else if (kind == "sphere") {
        surfaces.push_back(SyntheticSurface::sphere(radius(rng)));
      } else if (kind == "quadric") {
        surfaces.push_back(SyntheticSurface::random_quadric(rng));
      } else if (kind == "saddle") {
        surfaces.push_back(SyntheticSurface::saddle(bend(rng)));
      } else {
        throw std::invalid_argument("unknown shape kind '" + kind +
                                    "' (expected plane, sphere, quadric, or saddle)");
      }
      names.push_back(kind + std::to_string(i));
    }
  }

  const std::vector<PointCloud> clouds =
      generate_dataset(surfaces, opt.samples, corruption, opt.seed + 1);

  fs::create_directories(opt.out);
  for (size_t i = 0; i < clouds.size(); ++i) {
    const fs::path base = fs::path(opt.out) / names[i];
    save_xyz(base.string() + ".xyz", clouds[i]);
    save_normals(base.string() + ".normals", clouds[i].normals);
    std::cout << names[i] << ": " << clouds[i].size() << " points\n";
  }
  std::cout << "wrote " << clouds.size() << " clouds to " << opt.out << "\n";
  return 0;
}

struct EstimateOptions {
  std::string method = "pca";
  std::string input;
  std::string checkpoint;
  int patch_size = 64;
  bool patch_size_given = false;
  std::string out;
  int threads = 1;
};

int run_estimate(const EstimateOptions& opt) {
  PointCloud cloud = load_xyz(opt.input);

  ModelConfig model;
  HSurfParams params;
  int patch_size = opt.patch_size;
  std::unique_ptr<Estimator> estimator;
  if (opt.method == "hsurf") {
    if (opt.checkpoint.empty()) {
      throw std::invalid_argument("--method hsurf requires --checkpoint");
    }
    Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    model = ckpt.model;
    params = std::move(ckpt.params);
    if (opt.patch_size_given && opt.patch_size != model.patch_size) {
      throw std::invalid_argument("--patch-size " + std::to_string(opt.patch_size) +
                                  " conflicts with the checkpoint patch size " +
                                  std::to_string(model.patch_size));
    }
    patch_size = model.patch_size;
    estimator = make_estimator(opt.method, &model, &params);
  } else {
    estimator = make_estimator(opt.method, nullptr, nullptr);
  }
  if (patch_size < 1) throw std::invalid_argument("--patch-size must be >= 1");
  if (static_cast<size_t>(patch_size) > cloud.size()) {
    throw DataError("patch size " + std::to_string(patch_size) + " exceeds cloud size " +
                    std::to_string(cloud.size()));
  }

  const KdTree tree(cloud);
  std::vector<Vec3> normals(cloud.size(), Vec3(0, 0, 1));
  std::vector<int> failed(cloud.size(), 0);

  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      try {
        const Patch patch = extract_patch(cloud, tree, static_cast<int>(i), patch_size);
        const Vec3 local = estimator->estimate(patch);
        normals[i] = (patch.frame.transpose() * local).normalized();
      } catch (const NumericError&) {
        failed[i] = 1;  // keep the +z placeholder so line counts still match
      }
    }
  };

  const int threads = std::max(1, opt.threads);
  if (threads == 1 || cloud.size() < 2) {
    work(0, cloud.size());
  } else {
    const size_t n_workers = std::min<size_t>(static_cast<size_t>(threads), cloud.size());
    const size_t chunk = (cloud.size() + n_workers - 1) / n_workers;
    std::vector<std::thread> pool;
    for (size_t w = 0; w < n_workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(cloud.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  save_normals(opt.out, normals);
  const int failures = std::accumulate(failed.begin(), failed.end(), 0);
  if (failures > 0) {
    std::cerr << "warning: " << failures << " of " << cloud.size()
              << " estimates failed; wrote +z placeholders\n";
  }
  std::cout << "wrote " << normals.size() << " normals to " << opt.out << " (method "
            << estimator->name() << ")\n";
  return 0;
}

struct TrainOptions {
  std::string data;
  std::string config;
  std::string out;
};

int run_train(const TrainOptions& opt) {
  ModelConfig model;
  TrainConfig tconf;
  if (!opt.config.empty()) {
    const json j = load_json_file(opt.config);
    for (const auto& [key, value] : j.items()) {
      if (key != "model" && key != "train") {
        throw DataError("unknown top-level config key '" + key + "' (expected model, train)");
      }
    }
    if (j.contains("model")) model = model_from_json(j.at("model"));
    if (j.contains("train")) tconf = train_from_json(j.at("train"));
  }

  const std::vector<PointCloud> dataset = load_cloud_dir(opt.data, true);
  std::cout << "training on " << dataset.size() << " clouds, patch size " << model.patch_size
            << ", " << tconf.epochs << " epochs\n";

  auto save = [&](HSurfParams& params, const AdamState& state, long long step,
                  const std::string& rng_state) {
    Checkpoint ckpt;
    ckpt.model = model;
    ckpt.train = tconf;
    ckpt.params = params.clone();
    ckpt.opt = state;
    ckpt.has_opt = true;
    ckpt.step = step;
    ckpt.rng_state = rng_state;
    save_checkpoint(opt.out, ckpt);
  };

  const int save_every = std::max(1, tconf.epochs / 5);
  TrainResult result = train(model, tconf, dataset,
                             [&](int epoch, HSurfParams& params, const AdamState& state,
                                 long long step, const std::string& rng_state) {
                               if (epoch % save_every == 0 && epoch != tconf.epochs) {
                                 save(params, state, step, rng_state);
                               }
                             });

  save(result.params, result.opt_state, result.steps, result.rng_state);

  const size_t stride = std::max<size_t>(1, result.loss_history.size() / 20);
  for (size_t i = 0; i < result.loss_history.size(); i += stride) {
    std::cout << "step " << (i + 1) << " loss " << result.loss_history[i] << "\n";
  }
  if (!result.loss_history.empty()) {
    std::cout << "step " << result.loss_history.size() << " loss "
              << result.loss_history.back() << " (final)\n";
  }
  std::cout << "checkpoint written to " << opt.out << "\n";

  if (result.aborted) {
    std::cerr << "training diverged (non-finite loss); checkpoint holds the last good epoch\n";
    return 3;
  }
  return 0;
}

struct BenchOptionsCli {
  std::string data;
  std::string methods = "pca,jet:2,hsurf";
  std::string checkpoint;
  std::string report;
  std::string sigmas = "0";
  std::string densities = "none";
  int queries = 100;
  int patch_size = 64;
  bool patch_size_given = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

ordered_json report_to_json(const BenchReport& report) {
  ordered_json doc;
  doc["thresholds_deg"] = report.thresholds_deg;
  doc["cases"] = ordered_json::array();
  for (const BenchCase& bc : report.cases) {
    ordered_json c;
    c["method"] = bc.method;
    c["sigma"] = bc.corruption.sigma;
    c["density"] = density_name(bc.corruption.density);
    c["queries"] = bc.errors_deg.size();
    c["failures"] = bc.failures;
    c["rmse_deg"] = bc.rmse_deg;
    c["auc"] = bc.auc;
    c["pgp"] = bc.pgp;
    c["errors_deg"] = bc.errors_deg;
    doc["cases"].push_back(std::move(c));
  }
  return doc;
}

int run_bench(const BenchOptionsCli& opt) {
  const std::vector<PointCloud> clouds = load_cloud_dir(opt.data, true);

  ModelConfig model;
  HSurfParams params;
  bool have_ckpt = false;
  BenchOptions options;
  options.queries_per_cloud = opt.queries;
  options.seed = opt.seed;
  options.threads = opt.threads;
  options.patch_size = opt.patch_size;

  const std::vector<std::string> method_names = split_list(opt.methods);
  if (std::find(method_names.begin(), method_names.end(), "hsurf") != method_names.end()) {
    if (opt.checkpoint.empty()) {
      throw std::invalid_argument("methods include hsurf, which requires --checkpoint");
    }
    Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    model = ckpt.model;
    params = std::move(ckpt.params);
    have_ckpt = true;
    if (opt.patch_size_given && opt.patch_size != model.patch_size) {
      throw std::invalid_argument("--patch-size " + std::to_string(opt.patch_size) +
                                  " conflicts with the checkpoint patch size " +
                                  std::to_string(model.patch_size));
    }
    options.patch_size = model.patch_size;
  }

  std::vector<std::unique_ptr<Estimator>> estimators;
  std::vector<const Estimator*> raw;
  for (const std::string& name : method_names) {
    estimators.push_back(make_estimator(name, have_ckpt ? &model : nullptr,
                                        have_ckpt ? &params : nullptr));
    raw.push_back(estimators.back().get());
  }

  std::vector<Corruption> corruptions;
  for (const std::string& sigma_str : split_list(opt.sigmas)) {
    double sigma = 0.0;
    try {
      size_t used = 0;
      sigma = std::stod(sigma_str, &used);
      if (used != sigma_str.size() || sigma < 0.0) throw std::invalid_argument(sigma_str);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad sigma '" + sigma_str + "'");
    }
    for (const std::string& density : split_list(opt.densities)) {
      Corruption c;
      c.sigma = sigma;
      c.density = density_from_name(density);
      corruptions.push_back(c);
    }
  }

  const BenchReport report = run_benchmark(raw, clouds, corruptions, options);
  std::cout << format_report_table(report);

  if (!opt.report.empty()) {
    std::ofstream out(opt.report);
    if (!out) throw DataError("cannot write report '" + opt.report + "'");
    out << report_to_json(report).dump(1, '\t') << "\n";
    std::cout << "report written to " << opt.report << "\n";
  }
  return 0;
}

struct GradcheckOptions {
  std::string config;
  std::uint64_t seed = 7;
};

int run_gradcheck(const GradcheckOptions& opt) {
  ModelConfig model = ModelConfig::tiny();
  if (!opt.config.empty()) {
    const json j = load_json_file(opt.config);
    if (j.contains("model")) model = model_from_json(j.at("model"));
  }
  const GradCheckReport report = run_grad_suite(model, opt.seed);
  std::cout << format_grad_report(report);
  return report.all_passed() ? 0 : 3;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"point cloud normal estimation: classical fits and a learned estimator"};
  app.require_subcommand(1);
  const int thread_default = default_threads();

  SynthOptions synth_opt;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic clouds with ground truth");
  synth->add_option("--shapes", synth_opt.shapes, "comma list of kind:count (plane, sphere, quadric, saddle)");
  synth->add_option("--samples", synth_opt.samples, "points per cloud");
  synth->add_option("--sigma", synth_opt.sigma, "gaussian noise as a fraction of the bbox diagonal");
  synth->add_option("--density", synth_opt.density, "density corruption: none, stripes, gradient");
  synth->add_option("--seed", synth_opt.seed, "rng seed");
  synth->add_option("--out", synth_opt.out, "output directory")->required();

  EstimateOptions est_opt;
  est_opt.threads = thread_default;
  CLI::App* estimate = app.add_subcommand("estimate", "estimate a normal per input point");
  estimate->add_option("--method", est_opt.method, "pca, jet:<n>, or hsurf");
  estimate->add_option("--input", est_opt.input, "input .xyz file")->required();
  estimate->add_option("--checkpoint", est_opt.checkpoint, "checkpoint for --method hsurf");
  estimate->add_option("--patch-size", est_opt.patch_size, "neighbors per patch");
  estimate->add_option("--out", est_opt.out, "output .normals file")->required();
  estimate->add_option("--threads", est_opt.threads, "worker threads (default from NORMEST_THREADS)");

  TrainOptions train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "train the learned estimator");
  train_cmd->add_option("--data", train_opt.data, "directory of .xyz/.normals pairs")->required();
  train_cmd->add_option("--config", train_opt.config, "JSON config with model/train sections");
  train_cmd->add_option("--out", train_opt.out, "checkpoint output path")->required();

  BenchOptionsCli bench_opt;
  bench_opt.threads = thread_default;
  CLI::App* bench = app.add_subcommand("bench", "compare estimators across corruption levels");
  bench->add_option("--data", bench_opt.data, "directory of clean .xyz/.normals pairs")->required();
  bench->add_option("--methods", bench_opt.methods, "comma list of pca, jet:<n>, hsurf");
  bench->add_option("--checkpoint", bench_opt.checkpoint, "checkpoint when methods include hsurf");
  bench->add_option("--report", bench_opt.report, "machine-readable report output path");
  bench->add_option("--sigmas", bench_opt.sigmas, "comma list of noise fractions");
  bench->add_option("--densities", bench_opt.densities, "comma list of density modes");
  bench->add_option("--queries", bench_opt.queries, "query points per cloud");
  bench->add_option("--patch-size", bench_opt.patch_size, "neighbors per patch");
  bench->add_option("--seed", bench_opt.seed, "rng seed");
  bench->add_option("--threads", bench_opt.threads, "worker threads (default from NORMEST_THREADS)");

  GradcheckOptions grad_opt;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gradcheck->add_option("--config", grad_opt.config, "JSON config with a model section");
  gradcheck->add_option("--seed", grad_opt.seed, "rng seed");

  int code = 0;
  synth->callback([&] { code = run_synth(synth_opt); });
  estimate->callback([&] {
    est_opt.patch_size_given = estimate->count("--patch-size") > 0;
    code = run_estimate(est_opt);
  });
  train_cmd->callback([&] { code = run_train(train_opt); });
  bench->callback([&] {
    bench_opt.patch_size_given = bench->count("--patch-size") > 0;
    code = run_bench(bench_opt);
  });
  gradcheck->callback([&] { code = run_gradcheck(grad_opt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

}  // namespace normest
