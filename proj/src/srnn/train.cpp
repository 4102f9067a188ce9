// SPDX-License-Identifier: Apache-2.0
#include "painrnn/srnn/train.hpp"

#include <cmath>
#include <sstream>

namespace painrnn::srnn {

void Adam::step(const std::vector<ParamView> &params, const std::vector<ParamView> &grads,
                double lr) {
  require(params.size() == grads.size(), ErrorKind::Shape, "adam: params/grads mismatch");
  Index total = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    require(params[k].size == grads[k].size, ErrorKind::Shape, "adam: tensor size mismatch");
    total += params[k].size;
  }
  if (m_.size() == 0) {
    m_ = VectorXd::Zero(total);
    v_ = VectorXd::Zero(total);
  }
  require(m_.size() == total, ErrorKind::Shape, "adam: parameter layout changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  Index off = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<VectorXd> p(params[k].data, params[k].size);
    Eigen::Map<const VectorXd> g(grads[k].data, grads[k].size);
    auto m = m_.segment(off, params[k].size);
    auto v = v_.segment(off, params[k].size);
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    p.array() -= lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon) +
                       cfg_.weight_decay * p.array());
    off += params[k].size;
  }
}

int TrainConfig::total_epochs() const {
  int n = 0;
  for (const auto &ph : schedule) n += ph.epochs;
  return n;
}

double TrainConfig::learning_rate_at(int epoch) const {
  require(epoch >= 1 && epoch <= total_epochs(), ErrorKind::InvalidArgument,
          "epoch out of schedule range");
  int end = 0;
  for (const auto &ph : schedule) {
    end += ph.epochs;
    if (epoch <= end) return ph.learning_rate;
  }
  return schedule.back().learning_rate;
}

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorKind::InvalidArgument, "train: batch_size must be >= 1");
  require(!schedule.empty(), ErrorKind::InvalidArgument, "train: empty learning-rate schedule");
  for (const auto &ph : schedule) {
    require(ph.epochs >= 1 && ph.learning_rate > 0, ErrorKind::InvalidArgument,
            "train: schedule phases need positive epochs and learning rates");
  }
  require(adam.beta1 > 0 && adam.beta1 < 1 && adam.beta2 > 0 && adam.beta2 < 1 &&
              adam.epsilon > 0 && adam.weight_decay >= 0,
          ErrorKind::InvalidArgument, "train: invalid Adam settings");
}

TrainResult train(EnsembleModel init, const dataset::Dataset &ds, const TrainConfig &cfg) {
  cfg.validate();
  require(!ds.samples.empty(), ErrorKind::InvalidArgument, "train: empty dataset");
  TrainResult res{std::move(init), {}};
  Adam opt(cfg.adam);
  const auto params = param_views(res.model);
  const int epochs = cfg.total_epochs();
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const double lr = cfg.learning_rate_at(epoch);
    const auto batches = dataset::make_minibatches(ds, cfg.batch_size,
                                                   mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    double weighted = 0.0;
    double count = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto seq = make_sequence_batch(batches[bi].samples);
      auto lg = loss_and_grad(res.model, seq);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch " << bi + 1
            << " (learning rate " << lr << ")";
        fail(ErrorKind::Divergence, msg.str());
      }
      opt.step(params, param_views(lg.grad), lr);
      const double b = static_cast<double>(seq.batch());
      weighted += lg.loss * b;
      count += b;
    }
    res.trace.push_back({epoch, lr, weighted / count});
  }
  return res;
}

TrainResult train(const dataset::Dataset &ds, const EnsembleConfig &model_cfg, const TrainConfig &cfg) {
  return train(make_ensemble(model_cfg, cfg.seed), ds, cfg);
}

}  // namespace painrnn::srnn
