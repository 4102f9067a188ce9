// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "painrnn/common.hpp"
#include "painrnn/srnn/train.hpp"

namespace painrnn::srnn {

struct BatchNorm {
  VectorXd gamma, beta;
  VectorXd running_mean, running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  static BatchNorm identity(Index n);
};

/// latent -> FC -> BN -> tanh -> dropout -> FC -> BN. The 80-dim output is
/// concatenated with the hand-crafted features to form the fused descriptor.
struct FusionHead {
  MatrixXd W1;  // hidden x latent
  VectorXd b1;
  BatchNorm bn1;
  MatrixXd W2;  // out x hidden
  VectorXd b2;
  BatchNorm bn2;
  double dropout = 0.5;

  Index latent_dim() const { return W1.cols(); }
  Index hidden_dim() const { return W1.rows(); }
  Index output_dim() const { return W2.rows(); }
};

FusionHead make_head(Index latent_dim, Index hidden_dim, Index output_dim, double dropout,
                     std::uint64_t seed);
inline FusionHead make_head(std::uint64_t seed) { return make_head(320, 160, 80, 0.5, seed); }

/// Inference pass on a batch (latent_dim x n): running BN statistics, no dropout.
MatrixXd head_forward(const FusionHead &head, const MatrixXd &latents);

/// x = concat(head(z), delta). With `training`, dropout is sampled from `rng`
/// (BN still uses running statistics for a lone sample).
VectorXd project_and_fuse(const FusionHead &head, const VectorXd &latent, const VectorXd &delta,
                          bool training = false, std::mt19937_64 *rng = nullptr);

/// Batched inference fusion; `deltas` may have zero rows (no hand-crafted part).
MatrixXd fuse_batch(const FusionHead &head, const MatrixXd &latents, const MatrixXd &deltas);

enum class HeadTask { Binary, MultiLabel };

struct HeadTrainConfig {
  int epochs = 60;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

/// Trains the head together with a throwaway linear readout on the fused
/// vector. Binary: `targets` is 1 x n of {0,1}, softmax cross-entropy.
/// MultiLabel: `targets` is l x n of {-1,+1}, squared error.
void train_head(FusionHead &head, const MatrixXd &latents, const MatrixXd &deltas,
                const MatrixXd &targets, HeadTask task, const HeadTrainConfig &cfg);

}  // namespace painrnn::srnn
