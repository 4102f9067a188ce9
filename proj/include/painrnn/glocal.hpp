// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "painrnn/common.hpp"
#include "painrnn/srnn/train.hpp"

namespace painrnn::glocal {

/// Maps (pain level, protective) to a {-1,+1} label vector: a one-hot pain
/// block followed by one protective bit. With `banded`, pain levels collapse
/// to 0 | 1-3 | 4-6 | 7-10.
struct LabelCodec {
  bool banded = false;

  Index pain_classes() const { return banded ? 4 : 11; }
  Index label_count() const { return pain_classes() + 1; }
  int pain_class(int pain_level) const;

  VectorXd encode(int pain_level, bool protective) const;
  /// Throws unless the pain block has exactly one +1 and every entry is +-1.
  void validate(const VectorXd &y) const;
};

struct Decoded {
  int pain_class = 0;
  bool protective = false;
  VectorXd labels;  // {-1,+1}
};

/// Argmax over the pain block (lowest index on ties), sign of the last score.
Decoded decode(const LabelCodec &codec, const VectorXd &scores);

struct GlocalConfig {
  Index rank = 6;    // latent label dimension
  Index groups = 4;  // k-means clusters for the local terms
  double fit_weight = 1.0;        // latent codes vs. feature map
  double manifold_weight = 0.1;   // global + local Laplacian terms
  double ridge = 1e-3;            // Frobenius penalty on U, V, W
  int max_rounds = 100;
  double tolerance = 1e-6;        // relative objective change
  int kmeans_iterations = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GlocalModel {
  MatrixXd U;  // labels x rank
  MatrixXd V;  // rank x n (training codes)
  MatrixXd W;  // rank x features
  MatrixXd global_laplacian;
  std::vector<MatrixXd> local_laplacians;
  std::vector<int> group_of;  // training sample -> cluster
  GlocalConfig config;
  std::vector<double> objective_trace;  // entry 0 after initialization, then one per round

  bool fitted() const { return U.size() > 0 && W.size() > 0; }
  Index label_count() const { return U.rows(); }
  Index feature_count() const { return W.cols(); }
};

/// Lloyd's algorithm on the rows of X with farthest-point seeding. Returns the
/// cluster of each row.
std::vector<int> kmeans(const MatrixXd &X, Index clusters, int iterations, std::uint64_t seed);

/// I - D^-1/2 S D^-1/2 where S is the non-negative part of the cosine
/// similarity between label rows of `Y` (labels x samples).
MatrixXd label_laplacian(const MatrixXd &Y);

/// X is n x features, Y is n x labels.
GlocalModel fit_glocal(const MatrixXd &X, const MatrixXd &Y, const GlocalConfig &cfg = {});

/// Objective of the current factors on (X, Y), both with samples as rows.
double glocal_objective(const GlocalModel &m, const MatrixXd &X, const MatrixXd &Y);

/// U W x.
VectorXd predict_scores(const GlocalModel &m, const VectorXd &x);

struct MultilabelPrediction {
  VectorXd scores;
  Decoded decoded;
};

MultilabelPrediction predict_multilabel(const GlocalModel &m, const LabelCodec &codec,
                                        const VectorXd &x);

struct SoftmaxHead {
  MatrixXd W;  // 2 x features
  VectorXd b;

  bool fitted() const { return W.size() > 0; }
};

struct SoftmaxConfig {
  int epochs = 500;
  double learning_rate = 0.05;
  srnn::AdamConfig adam;
};

/// Full-batch Adam on the mean cross-entropy. X is n x features.
SoftmaxHead fit_binary_softmax(const MatrixXd &X, const std::vector<bool> &y,
                               const SoftmaxConfig &cfg = {});

struct BinaryPrediction {
  bool protective = false;
  double probability = 0;  // P(protective)
  VectorXd probabilities;  // (P(non-protective), P(protective))
};

BinaryPrediction predict_binary(const SoftmaxHead &head, const VectorXd &x);

}  // namespace painrnn::glocal
