// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "painrnn/dataset.hpp"
#include "painrnn/srnn/ensemble.hpp"

namespace painrnn::srnn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;  // decoupled; never part of the objective
};

/// Adam with decoupled weight decay over a fixed list of flat tensors.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// `params` and `grads` must keep the same layout across calls.
  void step(const std::vector<ParamView> &params, const std::vector<ParamView> &grads, double lr);
  long long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  VectorXd m_, v_;
  long long t_ = 0;
};

struct LrPhase {
  int epochs = 0;
  double learning_rate = 0.0;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  std::vector<LrPhase> schedule{{70, 1e-2}, {30, 1e-3}, {30, 1e-4}};
  AdamConfig adam;
  std::uint64_t seed = 1;

  int total_epochs() const;
  /// 1-based epoch.
  double learning_rate_at(int epoch) const;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;  // sample-weighted mean of the batch objective
};

struct TrainResult {
  EnsembleModel model;
  std::vector<EpochRecord> trace;
};

/// Trains `init` in place of a fresh model. Batches are reshuffled every epoch
/// from the config seed. Throws ErrorKind::Divergence on a non-finite loss.
TrainResult train(EnsembleModel init, const dataset::Dataset &ds, const TrainConfig &cfg);

/// Builds the model from `model_cfg` with the training seed, then trains.
TrainResult train(const dataset::Dataset &ds, const EnsembleConfig &model_cfg, const TrainConfig &cfg);

}  // namespace painrnn::srnn
