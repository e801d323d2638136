#include "normest/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "normest/loss.hpp"
#include "normest/tensor.hpp"

namespace normest {

void TrainConfig::validate() const {
  if (alpha1 < 0.0 || alpha2 < 0.0) throw std::invalid_argument("TrainConfig: loss weights must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw std::invalid_argument("TrainConfig: decay factor must be in (0,1]");
  }
  if (decay_every < 1) throw std::invalid_argument("TrainConfig: decay_every must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (queries_per_shape < 1) throw std::invalid_argument("TrainConfig: queries per shape must be >= 1");
}

namespace {

std::vector<Patch> extract_training_patches(const std::vector<PointCloud>& dataset,
                                            const ModelConfig& mc, int queries_per_shape,
                                            std::mt19937_64& rng) {
  std::vector<Patch> patches;
  for (size_t ci = 0; ci < dataset.size(); ++ci) {
    const PointCloud& cloud = dataset[ci];
    if (!cloud.has_normals()) {
      throw DataError("train: cloud " + std::to_string(ci) + " has no ground-truth normals");
    }
    if (static_cast<int>(cloud.size()) < mc.patch_size) {
      throw DataError("train: cloud " + std::to_string(ci) + " has " +
                      std::to_string(cloud.size()) + " points, need at least " +
                      std::to_string(mc.patch_size));
    }
    std::vector<int> all(cloud.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> chosen;
    const size_t want = std::min<size_t>(static_cast<size_t>(queries_per_shape), all.size());
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), want, rng);

    const KdTree tree(cloud);
    for (int q : chosen) {
      try {
        patches.push_back(extract_patch(cloud, tree, q, mc.patch_size));
      } catch (const NumericError&) {
        // Degenerate patch (coincident points); skip the query.
      }
    }
  }
  if (patches.empty()) throw DataError("train: no usable patches extracted");
  return patches;
}

}  // namespace

TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::vector<PointCloud>& dataset, HSurfParams initial,
                  const EpochSink& sink) {
  model_config.validate();
  train_config.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");

  std::mt19937_64 rng(train_config.seed);
  std::vector<Patch> patches =
      extract_training_patches(dataset, model_config, train_config.queries_per_shape, rng);

  HSurfParams params = std::move(initial);
  std::vector<Tensor> param_list;
  params.for_each([&](const std::string&, Tensor& t) { param_list.push_back(t); });
  AdamState state = AdamState::init(param_list);

  TrainResult result;
  result.loss_history.reserve(static_cast<size_t>(train_config.epochs) *
                              (patches.size() / static_cast<size_t>(train_config.batch_size) + 1));

  HSurfParams last_good = params.clone();
  AdamState last_good_state = state;
  long long last_good_steps = 0;

  double lr = train_config.lr;
  std::vector<size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    bool diverged = false;

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(train_config.batch_size)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(train_config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(stop - start);

      for (Tensor& p : param_list) p.zero_grad();
      double batch_loss = 0.0;

      for (size_t bi = start; bi < stop; ++bi) {
        const Patch& patch = patches[order[bi]];
        const Vec3 gt = *patch.gt_normal_local;

        Graph g;
        ForwardResult fwd = hsurf_forward(g, patch, params, model_config);
        Tensor l1 = train_config.normal_loss == TrainConfig::NormalLoss::Sin
                        ? sin_loss(g, fwd.normal, gt)
                        : mse_vector_loss(g, fwd.normal, gt);
        std::vector<Vec3> encoded;
        encoded.reserve(fwd.encoded_indices.size());
        for (int idx : fwd.encoded_indices) {
          encoded.push_back(patch.local_points[static_cast<size_t>(idx)]);
        }
        Tensor l2 = weight_loss(g, fwd.weights, encoded, gt);
        Tensor loss = total_loss(g, l1, l2, train_config.alpha1, train_config.alpha2);

        const double loss_value = loss.values()[0];
        if (!std::isfinite(loss_value)) {
          diverged = true;
          break;
        }
        batch_loss += loss_value;
        g.backward(scale(g, loss, inv_batch));
      }
      if (diverged) break;

      try {
        adam_step(param_list, state, lr);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      result.steps += 1;
      result.loss_history.push_back(batch_loss * inv_batch);
    }

    if (diverged) {
      result.params = std::move(last_good);
      result.opt_state = std::move(last_good_state);
      result.steps = last_good_steps;
      result.loss_history.resize(static_cast<size_t>(last_good_steps));
      result.aborted = true;
      std::ostringstream rs;
      rs << rng;
      result.rng_state = rs.str();
      return result;
    }

    last_good = params.clone();
    last_good_state = state;
    last_good_steps = result.steps;

    if (epoch % train_config.decay_every == 0) lr *= train_config.decay_factor;
    if (sink) {
      std::ostringstream rs;
      rs << rng;
      sink(epoch, params, state, result.steps, rs.str());
    }
  }

  result.params = std::move(params);
  result.opt_state = std::move(state);
  std::ostringstream rs;
  rs << rng;
  result.rng_state = rs.str();
  return result;
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const std::vector<PointCloud>& dataset, const EpochSink& sink) {
  return train(model_config, train_config, dataset,
               init_params(model_config, train_config.seed), sink);
}

}  // namespace normest
