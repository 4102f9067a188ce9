// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "painrnn/srnn/ensemble.hpp"

namespace gradcheck {

using namespace painrnn;

struct Report {
  double worst_rel = 0;
  std::string worst_name;
  Index checked = 0;
};

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Tiny ensemble (hidden 4/4/2) with random input widths and a random batch of
// length <= 8, regenerated until no latent coordinate sits within `margin` of
// the L1 kink.
struct Problem {
  srnn::EnsembleModel model;
  srnn::SequenceBatch batch;
};

inline Problem tiny_problem(std::mt19937_64 &rng, srnn::Framework fw, double margin = 2e-2) {
  std::uniform_int_distribution<int> width(1, 3), length(1, 8), batch(1, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    srnn::EnsembleConfig cfg;
    cfg.input_dims = {width(rng), width(rng), width(rng)};
    cfg.hidden = {4, 4, 2};
    cfg.skip = {3, 3, 2};
    cfg.max_length = 8;
    cfg.framework = fw;
    cfg.l1_weight = 0.005;
    Problem p;
    p.model = srnn::make_ensemble(cfg, rng());
    // Spread the decoder embedding away from identity so every term matters.
    for (auto &ae : p.model.aes)
      for (Index k = 0; k < ae.decoder.embed.size(); ++k) ae.decoder.embed.data()[k] += 0.3 * gauss(rng);
    const int len = length(rng), b = batch(rng);
    std::vector<std::vector<Series>> per_sample;
    for (int s = 0; s < b; ++s) {
      std::vector<Series> streams;
      for (Index d : cfg.input_dims) {
        Series x(len, d);
        for (Index k = 0; k < x.size(); ++k) x.data()[k] = gauss(rng);
        streams.push_back(x);
      }
      per_sample.push_back(streams);
    }
    p.batch = srnn::make_sequence_batch(per_sample);
    if (srnn::encode_shared(p.model, p.batch).cwiseAbs().minCoeff() > margin) return p;
  }
}

// Fourth-order central differences over every trainable scalar. The wider
// stencil keeps round-off below the size of the smallest gradients.
inline Report check(const Problem &p, double h = 1e-3) {
  Report r;
  const auto analytic = srnn::loss_and_grad(p.model, p.batch);
  srnn::EnsembleModel probe = p.model;
  srnn::EnsembleModel grad = analytic.grad;
  auto pv = srnn::param_views(probe);
  auto gv = srnn::param_views(grad);
  for (std::size_t t = 0; t < pv.size(); ++t) {
    for (Index k = 0; k < pv[t].size; ++k) {
      double &x = pv[t].data[k];
      const double orig = x;
      auto at = [&](double offset) {
        x = orig + offset;
        return srnn::ensemble_loss(probe, p.batch);
      };
      const double numeric = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
      x = orig;
      const double e = rel_error(gv[t].data[k], numeric);
      ++r.checked;
      if (e > r.worst_rel) {
        r.worst_rel = e;
        r.worst_name = pv[t].name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return r;
}

}  // namespace gradcheck
