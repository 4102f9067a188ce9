// SPDX-License-Identifier: Apache-2.0
#include "painrnn/srnn/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace painrnn::srnn {

BatchNorm BatchNorm::identity(Index n) {
  BatchNorm bn;
  bn.gamma = VectorXd::Ones(n);
  bn.beta = VectorXd::Zero(n);
  bn.running_mean = VectorXd::Zero(n);
  bn.running_var = VectorXd::Ones(n);
  return bn;
}

FusionHead make_head(Index latent_dim, Index hidden_dim, Index output_dim, double dropout,
                     std::uint64_t seed) {
  require(latent_dim >= 1 && hidden_dim >= 1 && output_dim >= 1, ErrorKind::InvalidArgument,
          "head dimensions must be positive");
  require(dropout >= 0 && dropout < 1, ErrorKind::InvalidArgument, "dropout must be in [0,1)");
  std::mt19937_64 rng(mix_seed(seed, 11));
  auto uniform = [&rng](Index rows, Index cols, Index fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
  };
  FusionHead h;
  h.W1 = uniform(hidden_dim, latent_dim, latent_dim);
  h.b1 = uniform(hidden_dim, 1, latent_dim);
  h.bn1 = BatchNorm::identity(hidden_dim);
  h.W2 = uniform(output_dim, hidden_dim, hidden_dim);
  h.b2 = uniform(output_dim, 1, hidden_dim);
  h.bn2 = BatchNorm::identity(output_dim);
  h.dropout = dropout;
  return h;
}

namespace {

MatrixXd bn_infer(const BatchNorm &bn, const MatrixXd &x) {
  const VectorXd scale = bn.gamma.array() / (bn.running_var.array() + bn.epsilon).sqrt();
  MatrixXd y = (x.colwise() - bn.running_mean).array().colwise() * scale.array();
  y.colwise() += bn.beta;
  return y;
}

struct BnCache {
  MatrixXd xhat;
  VectorXd inv_std;
};

MatrixXd bn_train(BatchNorm &bn, const MatrixXd &x, BnCache &c) {
  const double n = static_cast<double>(x.cols());
  const VectorXd mean = x.rowwise().mean();
  const MatrixXd centered = x.colwise() - mean;
  const VectorXd var = centered.array().square().rowwise().sum() / n;
  c.inv_std = (var.array() + bn.epsilon).rsqrt();
  c.xhat = centered.array().colwise() * c.inv_std.array();
  bn.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * mean;
  if (x.cols() > 1) bn.running_var = (1.0 - bn.momentum) * bn.running_var + bn.momentum * (var * (n / (n - 1.0)));
  MatrixXd y = c.xhat.array().colwise() * bn.gamma.array();
  y.colwise() += bn.beta;
  return y;
}

MatrixXd bn_backward(const BatchNorm &bn, const BnCache &c, const MatrixXd &dy, VectorXd &dgamma,
                     VectorXd &dbeta) {
  const double n = static_cast<double>(dy.cols());
  dgamma += dy.cwiseProduct(c.xhat).rowwise().sum();
  dbeta += dy.rowwise().sum();
  const MatrixXd dxhat = dy.array().colwise() * bn.gamma.array();
  const VectorXd sum_dxhat = dxhat.rowwise().sum();
  const VectorXd sum_dxhat_xhat = dxhat.cwiseProduct(c.xhat).rowwise().sum();
  MatrixXd dx = (n * dxhat).colwise() - sum_dxhat;
  dx -= (c.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dx = (dx.array().colwise() * (c.inv_std.array() / n)).matrix();
  return dx;
}

MatrixXd affine(const MatrixXd &W, const VectorXd &b, const MatrixXd &x) {
  MatrixXd y = W * x;
  y.colwise() += b;
  return y;
}

}  // namespace

MatrixXd head_forward(const FusionHead &head, const MatrixXd &latents) {
  require(latents.rows() == head.latent_dim(), ErrorKind::Shape,
          "head: latent has " + std::to_string(latents.rows()) + " rows, expected " +
              std::to_string(head.latent_dim()));
  const MatrixXd t1 = bn_infer(head.bn1, affine(head.W1, head.b1, latents)).array().tanh().matrix();
  return bn_infer(head.bn2, affine(head.W2, head.b2, t1));
}

VectorXd project_and_fuse(const FusionHead &head, const VectorXd &latent, const VectorXd &delta,
                          bool training, std::mt19937_64 *rng) {
  require(latent.size() == head.latent_dim(), ErrorKind::Shape,
          "project_and_fuse: latent length " + std::to_string(latent.size()) + ", expected " +
              std::to_string(head.latent_dim()));
  MatrixXd t1 = bn_infer(head.bn1, affine(head.W1, head.b1, latent)).array().tanh().matrix();
  if (training && head.dropout > 0) {
    require(rng != nullptr, ErrorKind::InvalidArgument, "project_and_fuse: training needs an rng");
    std::bernoulli_distribution keep(1.0 - head.dropout);
    for (Index i = 0; i < t1.rows(); ++i) t1(i, 0) = keep(*rng) ? t1(i, 0) / (1.0 - head.dropout) : 0.0;
  }
  const VectorXd out = bn_infer(head.bn2, affine(head.W2, head.b2, t1)).col(0);
  VectorXd x(out.size() + delta.size());
  x << out, delta;
  return x;
}

MatrixXd fuse_batch(const FusionHead &head, const MatrixXd &latents, const MatrixXd &deltas) {
  require(deltas.rows() == 0 || deltas.cols() == latents.cols(), ErrorKind::Shape,
          "fuse_batch: latent/feature column mismatch");
  const MatrixXd out = head_forward(head, latents);
  MatrixXd x(out.rows() + deltas.rows(), latents.cols());
  x.topRows(out.rows()) = out;
  if (deltas.rows() > 0) x.bottomRows(deltas.rows()) = deltas;
  return x;
}

void train_head(FusionHead &head, const MatrixXd &latents, const MatrixXd &deltas,
                const MatrixXd &targets, HeadTask task, const HeadTrainConfig &cfg) {
  const Index n = latents.cols();
  require(latents.rows() == head.latent_dim(), ErrorKind::Shape, "train_head: latent width mismatch");
  require(targets.cols() == n && (deltas.rows() == 0 || deltas.cols() == n), ErrorKind::Shape,
          "train_head: column count mismatch");
  require(task != HeadTask::Binary || targets.rows() == 1, ErrorKind::Shape,
          "train_head: binary targets must be a single row");
  if (n < 2) return;  // BN needs at least two samples per batch

  const Index fused = head.output_dim() + deltas.rows();
  const Index outs = task == HeadTask::Binary ? 2 : targets.rows();
  std::mt19937_64 rng(mix_seed(cfg.seed, 12));
  MatrixXd R(outs, fused);
  {
    const double a = 1.0 / std::sqrt(static_cast<double>(fused));
    std::uniform_real_distribution<double> u(-a, a);
    for (Index j = 0; j < R.cols(); ++j)
      for (Index i = 0; i < R.rows(); ++i) R(i, j) = u(rng);
  }
  VectorXd c = VectorXd::Zero(outs);

  FusionHead grad = head;
  MatrixXd gR = R;
  VectorXd gc = c;
  auto views = [](FusionHead &h, MatrixXd &r, VectorXd &cc) {
    std::vector<ParamView> v;
    for (auto *m : {&h.W1, &h.W2, &r}) v.push_back({"", m->data(), m->size()});
    for (auto *b : {&h.b1, &h.bn1.gamma, &h.bn1.beta, &h.b2, &h.bn2.gamma, &h.bn2.beta, &cc})
      v.push_back({"", b->data(), b->size()});
    return v;
  };
  const auto params = views(head, R, c);
  const auto grads = views(grad, gR, gc);
  Adam opt(cfg.adam);
  const double keep_p = 1.0 - head.dropout;
  std::bernoulli_distribution keep(keep_p);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 100 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) continue;
      const Index b = static_cast<Index>(end - start);
      MatrixXd Z(latents.rows(), b), D(deltas.rows(), b), T(targets.rows(), b);
      for (Index k = 0; k < b; ++k) {
        const Index src = order[start + static_cast<std::size_t>(k)];
        Z.col(k) = latents.col(src);
        if (deltas.rows() > 0) D.col(k) = deltas.col(src);
        T.col(k) = targets.col(src);
      }
      for (const auto &g : grads) std::fill(g.data, g.data + g.size, 0.0);

      BnCache c1, c2;
      const MatrixXd t1 = bn_train(head.bn1, affine(head.W1, head.b1, Z), c1).array().tanh().matrix();
      MatrixXd mask = MatrixXd::Ones(t1.rows(), b);
      if (head.dropout > 0) {
        for (Index j = 0; j < b; ++j)
          for (Index i = 0; i < t1.rows(); ++i) mask(i, j) = keep(rng) ? 1.0 / keep_p : 0.0;
      }
      const MatrixXd d1 = t1.cwiseProduct(mask);
      const MatrixXd y2 = bn_train(head.bn2, affine(head.W2, head.b2, d1), c2);
      MatrixXd x(fused, b);
      x.topRows(y2.rows()) = y2;
      if (D.rows() > 0) x.bottomRows(D.rows()) = D;
      const MatrixXd s = affine(R, c, x);

      MatrixXd ds;
      if (task == HeadTask::Binary) {
        ds.resize(2, b);
        for (Index j = 0; j < b; ++j) {
          const double mx = s.col(j).maxCoeff();
          const double e0 = std::exp(s(0, j) - mx), e1 = std::exp(s(1, j) - mx);
          const double p1 = e1 / (e0 + e1);
          const double y = T(0, j) > 0.5 ? 1.0 : 0.0;
          ds(0, j) = ((1.0 - p1) - (1.0 - y)) / static_cast<double>(b);
          ds(1, j) = (p1 - y) / static_cast<double>(b);
        }
      } else {
        ds = 2.0 * (s - T) / static_cast<double>(b);
      }
      gR.noalias() += ds * x.transpose();
      gc += ds.rowwise().sum();
      const MatrixXd dx = R.transpose() * ds;
      const MatrixXd da2 = bn_backward(head.bn2, c2, dx.topRows(y2.rows()), grad.bn2.gamma, grad.bn2.beta);
      grad.W2.noalias() += da2 * d1.transpose();
      grad.b2 += da2.rowwise().sum();
      const MatrixXd dt1 = (head.W2.transpose() * da2).cwiseProduct(mask);
      const MatrixXd dy1 = (dt1.array() * (1.0 - t1.array().square())).matrix();
      const MatrixXd da1 = bn_backward(head.bn1, c1, dy1, grad.bn1.gamma, grad.bn1.beta);
      grad.W1.noalias() += da1 * Z.transpose();
      grad.b1 += da1.rowwise().sum();
      opt.step(params, grads, cfg.learning_rate);
    }
  }
}

}  // namespace painrnn::srnn
