// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "painrnn/common.hpp"

namespace painrnn::srnn {

/// Gate weights of one GRU cell. Inputs and states are column-major batches:
/// every matrix argument below holds one sample per column.
struct GruCellParams {
  MatrixXd Wz, Wr, Wh;  // hidden x input
  MatrixXd Uz, Ur, Uh;  // hidden x hidden
  VectorXd bz, br, bh;  // hidden

  Index hidden() const { return Uz.rows(); }
  Index input() const { return Wz.cols(); }

  static GruCellParams zeros(Index input, Index hidden);
};

/// Decoder cell: the GRU gates read `embed * s_prev`, and `readout` maps the
/// new state to the reconstructed vector.
struct DecoderCellParams {
  GruCellParams cell;
  MatrixXd embed;         // input x input
  MatrixXd readout;       // input x hidden
  VectorXd readout_bias;  // input

  Index hidden() const { return cell.hidden(); }
  Index output() const { return readout.rows(); }

  static DecoderCellParams zeros(Index input, Index hidden);
};

void check_shapes(const GruCellParams &p);
void check_shapes(const DecoderCellParams &p);

/// Which recurrent connections feed h_t: the h_{t-1} path, the h_{t-L} path,
/// or both.
struct WiringStep {
  bool recent = true;
  bool skip = false;

  int active() const { return static_cast<int>(recent) + static_cast<int>(skip); }
  bool operator==(const WiringStep &) const = default;
};

struct SparseWiring {
  int skip_length = 1;
  std::vector<WiringStep> steps;  // steps[t-1] is the draw for time step t

  /// Effective wiring at 1-based step t. Steps t <= skip_length have no
  /// h_{t-L} and always use the recent path.
  WiringStep at(Index t) const;
  Index capacity() const { return static_cast<Index>(steps.size()); }
};

/// Uniform over {(1,0),(0,1),(1,1)} for each of `length` steps.
SparseWiring sample_wiring(int skip_length, Index length, std::mt19937_64 &rng);

/// All steps (1,0): a plain GRU.
SparseWiring dense_wiring(int skip_length, Index length);

/// Intermediate values kept for the backward pass of one cell evaluation.
struct GruCache {
  MatrixXd x, hprev, z, r, cand, rh;
};

MatrixXd gru_cell_forward(const GruCellParams &p, const MatrixXd &x, const MatrixXd &hprev,
                          GruCache *cache = nullptr);

/// Accumulates parameter gradients into `grad`; writes d/dh_prev into
/// `dhprev` and, when `dx` is non-null, d/dx into `*dx`.
void gru_cell_backward(const GruCellParams &p, const GruCache &cache, const MatrixXd &dout,
                       GruCellParams &grad, MatrixXd &dhprev, MatrixXd *dx);

/// One encoder step (update gate, reset gate, tanh candidate, convex mix).
MatrixXd gru_encoder_step(const GruCellParams &p, const MatrixXd &s_t, const MatrixXd &h_prev);

/// One decoder step: returns (h_t, s_hat_t).
std::pair<MatrixXd, MatrixXd> gru_decoder_step(const DecoderCellParams &p, const MatrixXd &s_prev,
                                               const MatrixXd &h_prev);

/// (recent * w_f + skip * w_f') / ||w||_0. The unused operand is ignored, so
/// it may be empty.
MatrixXd sparse_mix(const MatrixXd &recent_out, const MatrixXd &skip_out, WiringStep w);

}  // namespace painrnn::srnn
