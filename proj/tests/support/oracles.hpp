// SPDX-License-Identifier: Apache-2.0
// Reference implementations shared by the unit and acceptance tests. Each one
// is written from the definitions, independently of the library code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "painrnn/common.hpp"
#include "painrnn/srnn/ensemble.hpp"

namespace oracle {

using painrnn::Index;
using painrnn::MatrixXd;
using painrnn::VectorXd;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Standard GRU step, element by element.
inline VectorXd gru_step(const painrnn::srnn::GruCellParams &p, const VectorXd &x, const VectorXd &h) {
  const Index H = h.size();
  VectorXd z(H), r(H), out(H);
  for (Index i = 0; i < H; ++i) {
    double az = p.bz(i), ar = p.br(i);
    for (Index j = 0; j < x.size(); ++j) {
      az += p.Wz(i, j) * x(j);
      ar += p.Wr(i, j) * x(j);
    }
    for (Index j = 0; j < H; ++j) {
      az += p.Uz(i, j) * h(j);
      ar += p.Ur(i, j) * h(j);
    }
    z(i) = sigmoid(az);
    r(i) = sigmoid(ar);
  }
  for (Index i = 0; i < H; ++i) {
    double ah = p.bh(i);
    for (Index j = 0; j < x.size(); ++j) ah += p.Wh(i, j) * x(j);
    for (Index j = 0; j < H; ++j) ah += p.Uh(i, j) * (r(j) * h(j));
    out(i) = z(i) * std::tanh(ah) + (1.0 - z(i)) * h(i);
  }
  return out;
}

// Plain (dense) shared-framework ensemble for one sample: returns the latent
// and, per stream, the reconstruction in forward time order.
struct DenseForward {
  VectorXd latent;
  std::vector<MatrixXd> recon;  // length x channels
};

inline DenseForward dense_shared_forward(const painrnn::srnn::EnsembleModel &m,
                                         const std::vector<MatrixXd> &streams) {
  DenseForward out;
  const Index len = streams[0].rows();
  std::vector<VectorXd> finals;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    VectorXd h = VectorXd::Zero(m.config.hidden[i]);
    for (Index t = 0; t < len; ++t) h = gru_step(m.aes[i].encoder, streams[i].row(t).transpose(), h);
    finals.push_back(h);
  }
  out.latent.resize(m.latent_dim());
  Index off = 0;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const Index H = m.config.hidden[i];
    for (Index r = 0; r < H; ++r) {
      double acc = 0;
      for (Index c = 0; c < H; ++c) acc += m.aes[i].shared_proj(r, c) * finals[i](c);
      out.latent(off + r) = acc;
    }
    off += H;
  }
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const auto &ae = m.aes[i];
    const Index H = m.config.hidden[i], D = m.config.input_dims[i];
    VectorXd h(H);
    for (Index r = 0; r < H; ++r) {
      double acc = ae.init_bias(r);
      for (Index c = 0; c < out.latent.size(); ++c) acc += ae.init_map(r, c) * out.latent(c);
      h(r) = std::tanh(acc);
    }
    VectorXd s = VectorXd::Zero(D);
    MatrixXd rec(len, D);
    for (Index k = 1; k <= len; ++k) {
      VectorXd x = VectorXd::Zero(D);
      for (Index r = 0; r < D; ++r)
        for (Index c = 0; c < D; ++c) x(r) += ae.decoder.embed(r, c) * s(c);
      h = gru_step(ae.decoder.cell, x, h);
      for (Index r = 0; r < D; ++r) {
        double acc = ae.decoder.readout_bias(r);
        for (Index c = 0; c < H; ++c) acc += ae.decoder.readout(r, c) * h(c);
        s(r) = acc;
      }
      rec.row(len - k) = s.transpose();
    }
    out.recon.push_back(rec);
  }
  return out;
}

// Exhaustive DTW: minimum over every monotone unit-step path.
inline double dtw_cost_bruteforce(const MatrixXd &a, const MatrixXd &b) {
  const Index m = a.rows(), n = b.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<Index, Index>> path{{0, 0}};
  auto rec = [&](auto &&self) -> void {
    const auto [i, j] = path.back();
    if (i == m - 1 && j == n - 1) {
      double c = 0;
      for (const auto &[u, v] : path) c += (a.row(u) - b.row(v)).squaredNorm();
      best = std::min(best, c);
      return;
    }
    const std::pair<Index, Index> steps[3] = {{1, 0}, {0, 1}, {1, 1}};
    for (const auto &[di, dj] : steps) {
      if (i + di < m && j + dj < n) {
        path.push_back({i + di, j + dj});
        self(self);
        path.pop_back();
      }
    }
  };
  rec(rec);
  return best;
}

// 1-based ranks from a stable descending sort, so equal scores keep label order.
inline std::vector<Index> sorted_ranks(const MatrixXd &S, Index row) {
  std::vector<Index> order(static_cast<std::size_t>(S.cols()));
  for (Index j = 0; j < S.cols(); ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return S(row, a) > S(row, b); });
  std::vector<Index> rank(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[static_cast<std::size_t>(order[pos])] = static_cast<Index>(pos) + 1;
  return rank;
}

// Coverage: worst rank of a relevant label minus one, averaged over instances
// that have a relevant label.
inline double coverage_bruteforce(const MatrixXd &Y, const MatrixXd &S) {
  double total = 0;
  Index used = 0;
  for (Index i = 0; i < Y.rows(); ++i) {
    const auto rank = sorted_ranks(S, i);
    Index worst = 0;
    for (Index j = 0; j < Y.cols(); ++j)
      if (Y(i, j) > 0) worst = std::max(worst, rank[static_cast<std::size_t>(j)]);
    if (worst == 0) continue;
    total += static_cast<double>(worst - 1);
    ++used;
  }
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

// Ranking loss by explicit pair enumeration: a (relevant, irrelevant) pair is
// misordered when the irrelevant label is ranked ahead.
inline double ranking_loss_bruteforce(const MatrixXd &Y, const MatrixXd &S) {
  double total = 0;
  Index used = 0;
  for (Index i = 0; i < Y.rows(); ++i) {
    const auto rank = sorted_ranks(S, i);
    Index pos = 0, neg = 0, bad = 0;
    for (Index j = 0; j < Y.cols(); ++j) (Y(i, j) > 0 ? pos : neg)++;
    if (pos == 0 || neg == 0) continue;
    for (Index j = 0; j < Y.cols(); ++j)
      for (Index k = 0; k < Y.cols(); ++k)
        if (Y(i, j) > 0 && Y(i, k) <= 0 && rank[static_cast<std::size_t>(k)] < rank[static_cast<std::size_t>(j)]) ++bad;
    total += static_cast<double>(bad) / static_cast<double>(pos * neg);
    ++used;
  }
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

}  // namespace oracle
