#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "normest/adam.hpp"
#include "normest/common.hpp"
#include "normest/geometry.hpp"
#include "normest/hsurf.hpp"
#include "normest/synth.hpp"

namespace normest {

struct TrainConfig {
  double alpha1 = 0.1;           // sin-loss weight
  double alpha2 = 1.0;           // weight-loss weight
  double lr = 5e-4;
  double decay_factor = 0.2;
  int decay_every = 20;          // epochs between learning-rate decays
  int batch_size = 32;
  int epochs = 60;
  int queries_per_shape = 200;   // patches sampled per cloud, without replacement
  std::uint64_t seed = 0;

  enum class NormalLoss { Sin, Mse };
  NormalLoss normal_loss = NormalLoss::Sin;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  HSurfParams params;
  AdamState opt_state;
  std::vector<double> loss_history;  // mean unscaled batch loss per optimizer step
  long long steps = 0;
  bool aborted = false;              // non-finite loss; params hold the last good epoch
  std::string rng_state;             // sampler state at the end of training
};

// Called after every epoch so the caller can persist progress.
using EpochSink = std::function<void(int epoch, HSurfParams& params, const AdamState& state,
                                     long long step, const std::string& rng_state)>;

// Minibatch training over patches sampled from the dataset clouds. Every
// cloud must carry ground-truth normals and at least patch_size points.
// Single-threaded and bit-reproducible for a fixed seed.
TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::vector<PointCloud>& dataset, HSurfParams initial,
                  const EpochSink& sink = nullptr);

// Initializes parameters from the training seed and trains.
TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::vector<PointCloud>& dataset, const EpochSink& sink = nullptr);

}  // namespace normest
