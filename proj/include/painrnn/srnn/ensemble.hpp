// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "painrnn/common.hpp"
#include "painrnn/dataset.hpp"
#include "painrnn/srnn/gru.hpp"

namespace painrnn::srnn {

/// Shared: final encoder states are projected into one latent that seeds every
/// decoder and carries the L1 penalty. Independent: each autoencoder keeps its
/// own final state as decoder seed and L1 target; the latent is their plain
/// concatenation.
enum class Framework { Shared, Independent };

std::string to_string(Framework f);
Framework parse_framework(const std::string &text);

struct EnsembleConfig {
  std::vector<Index> input_dims{dataset::kAngleChannels, dataset::kEnergyChannels,
                                dataset::kEmgChannels};
  std::vector<Index> hidden{128, 128, 64};
  std::vector<int> skip{3, 3, 2};
  double l1_weight = 0.005;
  Framework framework = Framework::Shared;
  Index max_length = 4096;  // capacity of the frozen sparse wiring

  std::size_t size() const { return hidden.size(); }
  Index latent_dim() const;
  void validate() const;
};

struct AutoencoderParams {
  GruCellParams encoder;
  DecoderCellParams decoder;
  MatrixXd shared_proj;  // W^(E_i), hidden x hidden; empty in the independent framework
  MatrixXd init_map;     // hidden x latent; empty in the independent framework
  VectorXd init_bias;    // hidden
  SparseWiring encoder_wiring;
  SparseWiring decoder_wiring;
};

struct EnsembleModel {
  EnsembleConfig config;
  std::vector<AutoencoderParams> aes;

  Index latent_dim() const { return config.latent_dim(); }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, identity embeddings, and
/// wiring sampled once from `seed`.
EnsembleModel make_ensemble(const EnsembleConfig &cfg, std::uint64_t seed);

/// Same shapes and wiring, all trainable values zero. Used as gradient storage.
EnsembleModel zeros_like(const EnsembleModel &m);

/// Flat view of one trainable tensor.
struct ParamView {
  std::string name;
  double *data = nullptr;
  Index size = 0;
};

/// Every trainable tensor in a fixed order. Empty tensors are omitted.
std::vector<ParamView> param_views(EnsembleModel &m);
Index param_count(const EnsembleModel &m);

/// streams[i][t] holds the (input_dims[i] x batch) slab at step t.
struct SequenceBatch {
  std::vector<std::vector<MatrixXd>> streams;

  Index length() const { return streams.empty() ? 0 : static_cast<Index>(streams[0].size()); }
  Index batch() const { return length() == 0 ? 0 : streams[0][0].cols(); }
};

/// per_sample[b][i] is stream i of sample b (rows = time). All samples must
/// share one length.
SequenceBatch make_sequence_batch(const std::vector<std::vector<Series>> &per_sample);
SequenceBatch make_sequence_batch(const std::vector<dataset::MultistreamSample> &samples);
SequenceBatch make_sequence_batch(const dataset::MultistreamSample &sample);

/// Latent (latent_dim x batch) of a batch.
MatrixXd encode_shared(const EnsembleModel &m, const SequenceBatch &batch);
VectorXd encode_shared(const EnsembleModel &m, const dataset::MultistreamSample &sample);

/// Reconstructions in forward time order: result[i][t] is (input_dims[i] x batch).
std::vector<std::vector<MatrixXd>> decode_ensemble(const EnsembleModel &m, const MatrixXd &latent,
                                                   Index length);
/// Single-sample form: one (length x input_dims[i]) series per stream.
std::vector<Series> decode_ensemble(const EnsembleModel &m, const VectorXd &latent, Index length);

/// Final encoder hidden state of autoencoder `i` (hidden_i x batch), before
/// any shared projection.
MatrixXd encoder_final_state(const EnsembleModel &m, std::size_t i, const SequenceBatch &batch);

/// Sum over samples of reconstruction squared error plus lambda * |latent|_1,
/// divided by the batch size.
double ensemble_loss(const EnsembleModel &m, const SequenceBatch &batch);

struct LossAndGrad {
  double loss = 0.0;
  EnsembleModel grad;
};

/// Exact reverse-mode gradient of ensemble_loss. The L1 subgradient at an
/// exactly-zero latent coordinate is 0.
LossAndGrad loss_and_grad(const EnsembleModel &m, const SequenceBatch &batch);

}  // namespace painrnn::srnn
