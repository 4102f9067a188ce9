// SPDX-License-Identifier: Apache-2.0
#include "painrnn/glocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace painrnn::glocal {

int LabelCodec::pain_class(int pain_level) const {
  require(pain_level >= 0 && pain_level <= 10, ErrorKind::InvalidArgument,
          "label: pain level " + std::to_string(pain_level) + " outside [0,10]");
  if (!banded) return pain_level;
  if (pain_level == 0) return 0;
  if (pain_level <= 3) return 1;
  if (pain_level <= 6) return 2;
  return 3;
}

VectorXd LabelCodec::encode(int pain_level, bool protective) const {
  VectorXd y = VectorXd::Constant(label_count(), -1.0);
  y(pain_class(pain_level)) = 1.0;
  y(pain_classes()) = protective ? 1.0 : -1.0;
  return y;
}

void LabelCodec::validate(const VectorXd &y) const {
  require(y.size() == label_count(), ErrorKind::Shape,
          "label: expected " + std::to_string(label_count()) + " entries, got " +
              std::to_string(y.size()));
  int positives = 0;
  for (Index i = 0; i < y.size(); ++i) {
    require(y(i) == 1.0 || y(i) == -1.0, ErrorKind::InvalidArgument, "label: entries must be -1 or +1");
    if (i < pain_classes() && y(i) == 1.0) ++positives;
  }
  require(positives == 1, ErrorKind::InvalidArgument, "label: pain block needs exactly one +1");
}

Decoded decode(const LabelCodec &codec, const VectorXd &scores) {
  require(scores.size() == codec.label_count(), ErrorKind::Shape, "decode: score length mismatch");
  Decoded d;
  Index best = 0;
  for (Index i = 1; i < codec.pain_classes(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  d.pain_class = static_cast<int>(best);
  d.protective = scores(codec.pain_classes()) > 0.0;
  d.labels = VectorXd::Constant(codec.label_count(), -1.0);
  d.labels(best) = 1.0;
  d.labels(codec.pain_classes()) = d.protective ? 1.0 : -1.0;
  return d;
}

void GlocalConfig::validate() const {
  require(rank >= 1, ErrorKind::InvalidArgument, "glocal: rank must be >= 1");
  require(groups >= 1, ErrorKind::InvalidArgument, "glocal: groups must be >= 1");
  require(fit_weight >= 0 && manifold_weight >= 0 && ridge >= 0, ErrorKind::InvalidArgument,
          "glocal: weights must be non-negative");
  require(max_rounds >= 1 && kmeans_iterations >= 1, ErrorKind::InvalidArgument,
          "glocal: round limits must be >= 1");
  require(tolerance >= 0, ErrorKind::InvalidArgument, "glocal: tolerance must be >= 0");
}

std::vector<int> kmeans(const MatrixXd &X, Index clusters, int iterations, std::uint64_t seed) {
  const Index n = X.rows();
  require(n >= 1, ErrorKind::InvalidArgument, "kmeans: no points");
  require(clusters >= 1, ErrorKind::InvalidArgument, "kmeans: clusters must be >= 1");
  clusters = std::min(clusters, n);

  std::mt19937_64 rng(mix_seed(seed, 21));
  std::uniform_int_distribution<Index> pick(0, n - 1);
  MatrixXd centers(clusters, X.cols());
  centers.row(0) = X.row(pick(rng));
  VectorXd nearest = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < clusters; ++c) {
    Index far = 0;
    nearest.maxCoeff(&far);
    centers.row(c) = X.row(far);
    nearest = nearest.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      (centers.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (assign[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    MatrixXd sums = MatrixXd::Zero(clusters, X.cols());
    VectorXd counts = VectorXd::Zero(clusters);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Index c = 0; c < clusters; ++c) {
      if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    }
  }
  return assign;
}

MatrixXd label_laplacian(const MatrixXd &Y) {
  const Index l = Y.rows();
  const VectorXd norms = Y.rowwise().norm();
  MatrixXd S = MatrixXd::Zero(l, l);
  for (Index i = 0; i < l; ++i) {
    for (Index j = i; j < l; ++j) {
      if (norms(i) == 0.0 || norms(j) == 0.0) continue;
      const double c = std::max(0.0, Y.row(i).dot(Y.row(j)) / (norms(i) * norms(j)));
      S(i, j) = c;
      S(j, i) = c;
    }
  }
  const VectorXd deg = S.rowwise().sum();
  VectorXd inv_sqrt(l);
  for (Index i = 0; i < l; ++i) inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  MatrixXd L = -(inv_sqrt.asDiagonal() * S * inv_sqrt.asDiagonal());
  L.diagonal().array() += 1.0;
  return 0.5 * (L + L.transpose());
}

namespace {

MatrixXd solve(const MatrixXd &A, const MatrixXd &B) {
  return Eigen::CompleteOrthogonalDecomposition<MatrixXd>(A).solve(B);
}

std::vector<std::vector<Index>> members_of(const std::vector<int> &group_of, std::size_t groups) {
  std::vector<std::vector<Index>> members(groups);
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    members[static_cast<std::size_t>(group_of[i])].push_back(static_cast<Index>(i));
  }
  return members;
}

MatrixXd gather_cols(const MatrixXd &M, const std::vector<Index> &idx) {
  MatrixXd out(M.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = M.col(idx[k]);
  return out;
}

// Labels x samples / features x samples.
double objective(const GlocalModel &m, const MatrixXd &Xt, const MatrixXd &Yt) {
  const auto &c = m.config;
  const MatrixXd F = m.U * m.V;
  double j = (Yt - F).squaredNorm();
  j += c.fit_weight * (m.V - m.W * Xt).squaredNorm();
  double manifold = (F.transpose() * m.global_laplacian * F).trace();
  const auto members = members_of(m.group_of, m.local_laplacians.size());
  for (std::size_t g = 0; g < members.size(); ++g) {
    if (members[g].empty()) continue;
    const MatrixXd Fg = gather_cols(F, members[g]);
    manifold += (Fg.transpose() * m.local_laplacians[g] * Fg).trace();
  }
  j += c.manifold_weight * manifold;
  j += c.ridge * (m.U.squaredNorm() + m.V.squaredNorm() + m.W.squaredNorm());
  return j;
}

void update_w(GlocalModel &m, const MatrixXd &Xt) {
  const auto &c = m.config;
  const Index d = Xt.rows();
  if (c.fit_weight == 0.0) {
    m.W = MatrixXd::Zero(m.V.rows(), d);
    return;
  }
  MatrixXd A = c.fit_weight * (Xt * Xt.transpose());
  A.diagonal().array() += c.ridge;
  m.W = solve(A, c.fit_weight * (Xt * m.V.transpose())).transpose();
}

void update_v(GlocalModel &m, const MatrixXd &Xt, const MatrixXd &Yt,
              const std::vector<std::vector<Index>> &members) {
  const auto &c = m.config;
  const MatrixXd UtU = m.U.transpose() * m.U;
  for (std::size_t g = 0; g < members.size(); ++g) {
    if (members[g].empty()) continue;
    MatrixXd A = UtU + c.manifold_weight * (m.U.transpose() *
                                            (m.global_laplacian + m.local_laplacians[g]) * m.U);
    A.diagonal().array() += c.fit_weight + c.ridge;
    const MatrixXd rhs = m.U.transpose() * gather_cols(Yt, members[g]) +
                         c.fit_weight * (m.W * gather_cols(Xt, members[g]));
    const MatrixXd Vg = solve(A, rhs);
    for (std::size_t j = 0; j < members[g].size(); ++j) m.V.col(members[g][j]) = Vg.col(static_cast<Index>(j));
  }
}

// Adds kron(B, A) into K (B is k x k, A is l x l).
void add_kron(MatrixXd &K, const MatrixXd &B, const MatrixXd &A, double scale) {
  const Index l = A.rows();
  for (Index p = 0; p < B.rows(); ++p)
    for (Index q = 0; q < B.cols(); ++q) {
      if (B(p, q) != 0.0) K.block(p * l, q * l, l, l) += (scale * B(p, q)) * A;
    }
}

void update_u(GlocalModel &m, const MatrixXd &Yt, const std::vector<std::vector<Index>> &members) {
  const auto &c = m.config;
  const Index l = m.U.rows();
  const Index k = m.U.cols();
  MatrixXd VVt = m.V * m.V.transpose();
  MatrixXd B = VVt;
  B.diagonal().array() += c.ridge;
  MatrixXd K = MatrixXd::Zero(l * k, l * k);
  add_kron(K, B.transpose(), MatrixXd::Identity(l, l), 1.0);
  if (c.manifold_weight != 0.0) {
    add_kron(K, VVt.transpose(), m.global_laplacian, c.manifold_weight);
    for (std::size_t g = 0; g < members.size(); ++g) {
      if (members[g].empty()) continue;
      const MatrixXd Vg = gather_cols(m.V, members[g]);
      add_kron(K, (Vg * Vg.transpose()).transpose(), m.local_laplacians[g], c.manifold_weight);
    }
  }
  const MatrixXd rhs = Yt * m.V.transpose();
  const VectorXd u = solve(K, Eigen::Map<const VectorXd>(rhs.data(), rhs.size()));
  m.U = Eigen::Map<const MatrixXd>(u.data(), l, k);
}

}  // namespace

GlocalModel fit_glocal(const MatrixXd &X, const MatrixXd &Y, const GlocalConfig &cfg) {
  cfg.validate();
  const Index n = X.rows();
  require(Y.rows() == n, ErrorKind::Shape, "glocal: X and Y differ in sample count");
  require(n >= cfg.rank, ErrorKind::InvalidArgument,
          "glocal: need at least rank=" + std::to_string(cfg.rank) + " samples, got " + std::to_string(n));
  require(cfg.rank <= Y.cols(), ErrorKind::InvalidArgument, "glocal: rank exceeds label count");
  require(X.allFinite() && Y.allFinite(), ErrorKind::NonFinite, "glocal: non-finite input");

  const MatrixXd Xt = X.transpose();
  const MatrixXd Yt = Y.transpose();
  GlocalModel m;
  m.config = cfg;
  m.group_of = kmeans(X, cfg.groups, cfg.kmeans_iterations, cfg.seed);
  const std::size_t groups = static_cast<std::size_t>(std::min(cfg.groups, n));
  const auto members = members_of(m.group_of, groups);
  m.global_laplacian = label_laplacian(Yt);
  m.local_laplacians.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    m.local_laplacians[g] = members[g].empty() ? MatrixXd::Zero(Yt.rows(), Yt.rows())
                                               : label_laplacian(gather_cols(Yt, members[g]));
  }

  Eigen::JacobiSVD<MatrixXd> svd(Yt, Eigen::ComputeThinU);
  m.U = svd.matrixU().leftCols(cfg.rank);
  m.V = m.U.transpose() * Yt;
  update_w(m, Xt);
  m.objective_trace.push_back(objective(m, Xt, Yt));

  for (int round = 0; round < cfg.max_rounds; ++round) {
    update_v(m, Xt, Yt, members);
    update_u(m, Yt, members);
    update_w(m, Xt);
    const double prev = m.objective_trace.back();
    const double cur = objective(m, Xt, Yt);
    require(std::isfinite(cur), ErrorKind::Divergence, "glocal: objective became non-finite");
    m.objective_trace.push_back(cur);
    if (std::abs(prev - cur) <= cfg.tolerance * std::max(std::abs(prev), 1e-300)) break;
  }
  return m;
}

double glocal_objective(const GlocalModel &m, const MatrixXd &X, const MatrixXd &Y) {
  require(m.fitted(), ErrorKind::State, "glocal: model is not fitted");
  require(X.rows() == m.V.cols() && Y.rows() == m.V.cols(), ErrorKind::Shape,
          "glocal: objective needs the training samples");
  return objective(m, X.transpose(), Y.transpose());
}

VectorXd predict_scores(const GlocalModel &m, const VectorXd &x) {
  require(m.fitted(), ErrorKind::State, "glocal: model is not fitted");
  require(x.size() == m.feature_count(), ErrorKind::Shape,
          "glocal: feature vector has " + std::to_string(x.size()) + " entries, expected " +
              std::to_string(m.feature_count()));
  return m.U * (m.W * x);
}

MultilabelPrediction predict_multilabel(const GlocalModel &m, const LabelCodec &codec,
                                        const VectorXd &x) {
  MultilabelPrediction p;
  p.scores = predict_scores(m, x);
  p.decoded = decode(codec, p.scores);
  return p;
}

SoftmaxHead fit_binary_softmax(const MatrixXd &X, const std::vector<bool> &y, const SoftmaxConfig &cfg) {
  const Index n = X.rows();
  require(static_cast<Index>(y.size()) == n, ErrorKind::Shape, "softmax: label count mismatch");
  require(std::find(y.begin(), y.end(), true) != y.end() &&
              std::find(y.begin(), y.end(), false) != y.end(),
          ErrorKind::InvalidArgument, "softmax: training set must contain both classes");
  require(X.allFinite(), ErrorKind::NonFinite, "softmax: non-finite input");
  require(cfg.epochs >= 1 && cfg.learning_rate > 0, ErrorKind::InvalidArgument,
          "softmax: epochs and learning rate must be positive");

  const MatrixXd Xt = X.transpose();
  MatrixXd T = MatrixXd::Zero(2, n);
  for (Index j = 0; j < n; ++j) T(y[static_cast<std::size_t>(j)] ? 1 : 0, j) = 1.0;

  SoftmaxHead h{MatrixXd::Zero(2, X.cols()), VectorXd::Zero(2)};
  MatrixXd gW(2, X.cols());
  VectorXd gb(2);
  const std::vector<srnn::ParamView> params{{"W", h.W.data(), h.W.size()}, {"b", h.b.data(), h.b.size()}};
  const std::vector<srnn::ParamView> grads{{"W", gW.data(), gW.size()}, {"b", gb.data(), gb.size()}};
  srnn::Adam opt(cfg.adam);
  for (int e = 0; e < cfg.epochs; ++e) {
    MatrixXd S = h.W * Xt;
    S.colwise() += h.b;
    const Eigen::RowVectorXd mx = S.colwise().maxCoeff();
    MatrixXd P = (S.rowwise() - mx).array().exp().matrix();
    P = P.array().rowwise() / P.colwise().sum().array();
    const MatrixXd G = (P - T) / static_cast<double>(n);
    gW = G * X;
    gb = G.rowwise().sum();
    opt.step(params, grads, cfg.learning_rate);
  }
  return h;
}

BinaryPrediction predict_binary(const SoftmaxHead &head, const VectorXd &x) {
  require(head.fitted(), ErrorKind::State, "softmax: head is not fitted");
  require(x.size() == head.W.cols(), ErrorKind::Shape, "softmax: feature length mismatch");
  const VectorXd s = head.W * x + head.b;
  const double mx = s.maxCoeff();
  const double e0 = std::exp(s(0) - mx), e1 = std::exp(s(1) - mx);
  BinaryPrediction p;
  p.probabilities = VectorXd(2);
  p.probabilities << e0 / (e0 + e1), e1 / (e0 + e1);
  p.probability = p.probabilities(1);
  p.protective = p.probabilities(1) > p.probabilities(0);
  return p;
}

}  // namespace painrnn::glocal
