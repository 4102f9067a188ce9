// SPDX-License-Identifier: Apache-2.0
#include "painrnn/srnn/ensemble.hpp"

#include <cmath>
#include <random>

namespace painrnn::srnn {

std::string to_string(Framework f) { return f == Framework::Shared ? "SF" : "IF"; }

Framework parse_framework(const std::string &text) {
  if (text == "SF" || text == "shared") return Framework::Shared;
  if (text == "IF" || text == "independent") return Framework::Independent;
  fail(ErrorKind::InvalidArgument, "unknown training framework '" + text + "'");
}

Index EnsembleConfig::latent_dim() const {
  Index n = 0;
  for (Index h : hidden) n += h;
  return n;
}

void EnsembleConfig::validate() const {
  require(!hidden.empty() && hidden.size() == input_dims.size() && hidden.size() == skip.size(),
          ErrorKind::InvalidArgument, "ensemble config: input_dims, hidden, skip must have equal length");
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    require(hidden[i] >= 1 && input_dims[i] >= 1 && skip[i] >= 1, ErrorKind::InvalidArgument,
            "ensemble config: sizes and skip lengths must be positive");
  }
  require(l1_weight >= 0 && std::isfinite(l1_weight), ErrorKind::InvalidArgument,
          "ensemble config: l1_weight must be finite and >= 0");
  require(max_length >= 1, ErrorKind::InvalidArgument, "ensemble config: max_length must be >= 1");
}

namespace {

void fill_uniform(MatrixXd &m, Index fan_in, std::mt19937_64 &rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-a, a);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
}

void fill_uniform(VectorXd &v, Index fan_in, std::mt19937_64 &rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-a, a);
  for (Index i = 0; i < v.size(); ++i) v(i) = u(rng);
}

void init_cell(GruCellParams &p, std::mt19937_64 &rng) {
  const Index d = p.input();
  const Index h = p.hidden();
  for (MatrixXd *w : {&p.Wz, &p.Wr, &p.Wh}) fill_uniform(*w, d, rng);
  for (MatrixXd *u : {&p.Uz, &p.Ur, &p.Uh}) fill_uniform(*u, h, rng);
  for (VectorXd *b : {&p.bz, &p.br, &p.bh}) fill_uniform(*b, h, rng);
}

}  // namespace

EnsembleModel make_ensemble(const EnsembleConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  EnsembleModel m;
  m.config = cfg;
  std::mt19937_64 rng(mix_seed(seed, 1));
  std::mt19937_64 wiring_rng(mix_seed(seed, 2));
  const Index eta = cfg.latent_dim();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Index d = cfg.input_dims[i];
    const Index h = cfg.hidden[i];
    AutoencoderParams ae;
    ae.encoder = GruCellParams::zeros(d, h);
    init_cell(ae.encoder, rng);
    ae.decoder = DecoderCellParams::zeros(d, h);
    init_cell(ae.decoder.cell, rng);
    ae.decoder.embed = MatrixXd::Identity(d, d);
    fill_uniform(ae.decoder.readout, h, rng);
    fill_uniform(ae.decoder.readout_bias, h, rng);
    if (cfg.framework == Framework::Shared) {
      ae.shared_proj = MatrixXd::Zero(h, h);
      fill_uniform(ae.shared_proj, h, rng);
      ae.init_map = MatrixXd::Zero(h, eta);
      fill_uniform(ae.init_map, eta, rng);
      ae.init_bias = VectorXd::Zero(h);
      fill_uniform(ae.init_bias, eta, rng);
    }
    ae.encoder_wiring = sample_wiring(cfg.skip[i], cfg.max_length, wiring_rng);
    ae.decoder_wiring = sample_wiring(cfg.skip[i], cfg.max_length, wiring_rng);
    m.aes.push_back(std::move(ae));
  }
  return m;
}

EnsembleModel zeros_like(const EnsembleModel &m) {
  EnsembleModel g = m;
  for (auto &v : param_views(g)) std::fill(v.data, v.data + v.size, 0.0);
  return g;
}

std::vector<ParamView> param_views(EnsembleModel &m) {
  std::vector<ParamView> out;
  auto add = [&out](const std::string &name, auto &tensor) {
    if (tensor.size() > 0) out.push_back({name, tensor.data(), tensor.size()});
  };
  auto add_cell = [&add](const std::string &prefix, GruCellParams &c) {
    add(prefix + ".Wz", c.Wz);
    add(prefix + ".Wr", c.Wr);
    add(prefix + ".Wh", c.Wh);
    add(prefix + ".Uz", c.Uz);
    add(prefix + ".Ur", c.Ur);
    add(prefix + ".Uh", c.Uh);
    add(prefix + ".bz", c.bz);
    add(prefix + ".br", c.br);
    add(prefix + ".bh", c.bh);
  };
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    auto &ae = m.aes[i];
    const std::string p = "ae" + std::to_string(i + 1);
    add_cell(p + ".enc", ae.encoder);
    add_cell(p + ".dec", ae.decoder.cell);
    add(p + ".dec.embed", ae.decoder.embed);
    add(p + ".dec.readout", ae.decoder.readout);
    add(p + ".dec.readout_bias", ae.decoder.readout_bias);
    add(p + ".shared_proj", ae.shared_proj);
    add(p + ".init_map", ae.init_map);
    add(p + ".init_bias", ae.init_bias);
  }
  return out;
}

Index param_count(const EnsembleModel &m) {
  Index n = 0;
  for (const auto &v : param_views(const_cast<EnsembleModel &>(m))) n += v.size;
  return n;
}

SequenceBatch make_sequence_batch(const std::vector<std::vector<Series>> &per_sample) {
  require(!per_sample.empty(), ErrorKind::InvalidArgument, "empty batch");
  const std::size_t n_streams = per_sample[0].size();
  const Index len = per_sample[0].empty() ? 0 : per_sample[0][0].rows();
  require(len >= 1, ErrorKind::Shape, "batch sequences must have at least one step");
  const Index b = static_cast<Index>(per_sample.size());
  SequenceBatch out;
  out.streams.resize(n_streams);
  for (std::size_t i = 0; i < n_streams; ++i) {
    const Index d = per_sample[0][i].cols();
    for (const auto &s : per_sample) {
      require(s.size() == n_streams, ErrorKind::Shape, "samples differ in stream count");
      require(s[i].rows() == len, ErrorKind::Shape, "stream length mismatch within batch");
      require(s[i].cols() == d, ErrorKind::Shape, "stream width mismatch within batch");
    }
    out.streams[i].assign(static_cast<std::size_t>(len), MatrixXd(d, b));
    for (Index t = 0; t < len; ++t) {
      MatrixXd &slab = out.streams[i][static_cast<std::size_t>(t)];
      for (Index k = 0; k < b; ++k) slab.col(k) = per_sample[static_cast<std::size_t>(k)][i].row(t).transpose();
    }
  }
  return out;
}

SequenceBatch make_sequence_batch(const std::vector<dataset::MultistreamSample> &samples) {
  std::vector<std::vector<Series>> per;
  per.reserve(samples.size());
  for (const auto &s : samples) per.push_back({s.angles, s.energies, s.emg});
  return make_sequence_batch(per);
}

SequenceBatch make_sequence_batch(const dataset::MultistreamSample &sample) {
  return make_sequence_batch(std::vector<dataset::MultistreamSample>{sample});
}

namespace {

struct RecurrentTrace {
  std::vector<MatrixXd> h;  // h[0..C]
  std::vector<GruCache> recent, skip;
  std::vector<WiringStep> wiring;
};

struct DecoderTrace : RecurrentTrace {
  std::vector<MatrixXd> shat;  // shat[0..C], shat[0] = 0
};

struct ForwardTrace {
  std::vector<RecurrentTrace> enc;
  std::vector<DecoderTrace> dec;
  std::vector<MatrixXd> h0;  // decoder initial states
  MatrixXd latent;
  double loss = 0.0;
};

void check_batch(const EnsembleModel &m, const SequenceBatch &batch) {
  require(batch.streams.size() == m.aes.size(), ErrorKind::Shape,
          "batch has " + std::to_string(batch.streams.size()) + " streams, model expects " +
              std::to_string(m.aes.size()));
  const Index len = batch.length();
  require(len >= 1, ErrorKind::Shape, "batch sequences must have at least one step");
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    require(static_cast<Index>(batch.streams[i].size()) == len, ErrorKind::Shape,
            "stream length mismatch");
    require(batch.streams[i][0].rows() == m.config.input_dims[i], ErrorKind::Shape,
            "stream " + std::to_string(i + 1) + " width does not match the encoder input");
  }
}

// One pass of a (possibly sparse) recurrent net over `inputs`; with `trace`
// the per-step caches are kept for backpropagation.
MatrixXd run_encoder(const GruCellParams &p, const SparseWiring &wiring,
                     const std::vector<MatrixXd> &inputs, RecurrentTrace *trace) {
  const Index len = static_cast<Index>(inputs.size());
  const Index b = inputs[0].cols();
  const int skip = wiring.skip_length;
  std::vector<MatrixXd> h(static_cast<std::size_t>(len + 1));
  h[0] = MatrixXd::Zero(p.hidden(), b);
  if (trace) {
    trace->recent.resize(static_cast<std::size_t>(len + 1));
    trace->skip.resize(static_cast<std::size_t>(len + 1));
    trace->wiring.resize(static_cast<std::size_t>(len + 1));
  }
  for (Index t = 1; t <= len; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    const WiringStep w = wiring.at(t);
    const MatrixXd &x = inputs[ut - 1];
    MatrixXd f, g;
    if (w.recent) f = gru_cell_forward(p, x, h[ut - 1], trace ? &trace->recent[ut] : nullptr);
    if (w.skip) g = gru_cell_forward(p, x, h[ut - static_cast<std::size_t>(skip)], trace ? &trace->skip[ut] : nullptr);
    h[ut] = sparse_mix(f, g, w);
    if (trace) trace->wiring[ut] = w;
  }
  MatrixXd last = h.back();
  if (trace) trace->h = std::move(h);
  return last;
}

// Backpropagates d/dh_C through the encoder trace.
void backprop_encoder(const GruCellParams &p, int skip, const RecurrentTrace &tr, MatrixXd dlast,
                      GruCellParams &g) {
  const std::size_t len = tr.h.size() - 1;
  std::vector<MatrixXd> dh(len + 1);
  for (auto &d : dh) d = MatrixXd::Zero(dlast.rows(), dlast.cols());
  dh[len] = std::move(dlast);
  MatrixXd dprev;
  for (std::size_t t = len; t >= 1; --t) {
    const WiringStep w = tr.wiring[t];
    const double share = 1.0 / w.active();
    const MatrixXd dout = w.active() == 2 ? MatrixXd(dh[t] * share) : dh[t];
    if (w.recent) {
      gru_cell_backward(p, tr.recent[t], dout, g, dprev, nullptr);
      dh[t - 1] += dprev;
    }
    if (w.skip) {
      gru_cell_backward(p, tr.skip[t], dout, g, dprev, nullptr);
      dh[t - static_cast<std::size_t>(skip)] += dprev;
    }
  }
}

std::vector<MatrixXd> run_decoder(const DecoderCellParams &p, const SparseWiring &wiring,
                                  const MatrixXd &h0, Index len, DecoderTrace *trace) {
  const Index b = h0.cols();
  const int skip = wiring.skip_length;
  std::vector<MatrixXd> h(static_cast<std::size_t>(len + 1));
  std::vector<MatrixXd> shat(static_cast<std::size_t>(len + 1));
  h[0] = h0;
  shat[0] = MatrixXd::Zero(p.output(), b);
  if (trace) {
    trace->recent.resize(static_cast<std::size_t>(len + 1));
    trace->skip.resize(static_cast<std::size_t>(len + 1));
    trace->wiring.resize(static_cast<std::size_t>(len + 1));
  }
  for (Index k = 1; k <= len; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const WiringStep w = wiring.at(k);
    const MatrixXd x = p.embed * shat[uk - 1];
    MatrixXd f, g;
    if (w.recent) f = gru_cell_forward(p.cell, x, h[uk - 1], trace ? &trace->recent[uk] : nullptr);
    if (w.skip) g = gru_cell_forward(p.cell, x, h[uk - static_cast<std::size_t>(skip)], trace ? &trace->skip[uk] : nullptr);
    h[uk] = sparse_mix(f, g, w);
    shat[uk] = p.readout * h[uk];
    shat[uk].colwise() += p.readout_bias;
    if (trace) trace->wiring[uk] = w;
  }
  if (trace) {
    trace->h = std::move(h);
    trace->shat = shat;
  }
  // Emitted order is s_C .. s_1; hand back forward order.
  std::vector<MatrixXd> forward(static_cast<std::size_t>(len));
  for (Index k = 1; k <= len; ++k) forward[static_cast<std::size_t>(len - k)] = std::move(shat[static_cast<std::size_t>(k)]);
  return forward;
}

// `dshat_loss[k]` is the loss gradient w.r.t. decoder output k (emission
// order). Returns d/dh0.
MatrixXd backprop_decoder(const DecoderCellParams &p, int skip, const DecoderTrace &tr,
                          const std::vector<MatrixXd> &dshat_loss, DecoderCellParams &g) {
  const std::size_t len = tr.h.size() - 1;
  const Index hdim = p.hidden();
  const Index b = tr.h[0].cols();
  std::vector<MatrixXd> dh(len + 1, MatrixXd::Zero(hdim, b));
  std::vector<MatrixXd> dshat(len + 1, MatrixXd::Zero(p.output(), b));
  MatrixXd dprev, dx_path, dx;
  for (std::size_t k = len; k >= 1; --k) {
    const MatrixXd ds = dshat[k] + dshat_loss[k];
    g.readout.noalias() += ds * tr.h[k].transpose();
    g.readout_bias += ds.rowwise().sum();
    dh[k].noalias() += p.readout.transpose() * ds;

    const WiringStep w = tr.wiring[k];
    const MatrixXd dout = w.active() == 2 ? MatrixXd(dh[k] / 2.0) : dh[k];
    dx = MatrixXd::Zero(p.output(), b);
    if (w.recent) {
      gru_cell_backward(p.cell, tr.recent[k], dout, g.cell, dprev, &dx_path);
      dh[k - 1] += dprev;
      dx += dx_path;
    }
    if (w.skip) {
      gru_cell_backward(p.cell, tr.skip[k], dout, g.cell, dprev, &dx_path);
      dh[k - static_cast<std::size_t>(skip)] += dprev;
      dx += dx_path;
    }
    g.embed.noalias() += dx * tr.shat[k - 1].transpose();
    if (k >= 2) dshat[k - 1].noalias() += p.embed.transpose() * dx;
  }
  return dh[0];
}

MatrixXd assemble_latent(const EnsembleModel &m, const std::vector<MatrixXd> &finals) {
  const Index b = finals[0].cols();
  MatrixXd z(m.latent_dim(), b);
  Index off = 0;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const Index h = m.config.hidden[i];
    if (m.config.framework == Framework::Shared) {
      z.middleRows(off, h).noalias() = m.aes[i].shared_proj * finals[i];
    } else {
      z.middleRows(off, h) = finals[i];
    }
    off += h;
  }
  return z;
}

std::vector<MatrixXd> decoder_initial_states(const EnsembleModel &m, const MatrixXd &z) {
  std::vector<MatrixXd> h0;
  Index off = 0;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const Index h = m.config.hidden[i];
    if (m.config.framework == Framework::Shared) {
      MatrixXd pre = m.aes[i].init_map * z;
      pre.colwise() += m.aes[i].init_bias;
      h0.push_back(pre.array().tanh().matrix());
    } else {
      h0.push_back(z.middleRows(off, h));
    }
    off += h;
  }
  return h0;
}

ForwardTrace forward(const EnsembleModel &m, const SequenceBatch &batch, bool keep) {
  check_batch(m, batch);
  const Index len = batch.length();
  const double b = static_cast<double>(batch.batch());
  ForwardTrace tr;
  tr.enc.resize(m.aes.size());
  tr.dec.resize(m.aes.size());
  std::vector<MatrixXd> finals;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    finals.push_back(run_encoder(m.aes[i].encoder, m.aes[i].encoder_wiring, batch.streams[i],
                                 keep ? &tr.enc[i] : nullptr));
  }
  tr.latent = assemble_latent(m, finals);
  tr.h0 = decoder_initial_states(m, tr.latent);
  double sq = 0.0;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const auto recon = run_decoder(m.aes[i].decoder, m.aes[i].decoder_wiring, tr.h0[i], len,
                                   keep ? &tr.dec[i] : nullptr);
    for (Index t = 0; t < len; ++t) {
      sq += (batch.streams[i][static_cast<std::size_t>(t)] - recon[static_cast<std::size_t>(t)]).squaredNorm();
    }
  }
  tr.loss = (sq + m.config.l1_weight * tr.latent.cwiseAbs().sum()) / b;
  return tr;
}

}  // namespace

MatrixXd encode_shared(const EnsembleModel &m, const SequenceBatch &batch) {
  check_batch(m, batch);
  std::vector<MatrixXd> finals;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    finals.push_back(run_encoder(m.aes[i].encoder, m.aes[i].encoder_wiring, batch.streams[i], nullptr));
  }
  return assemble_latent(m, finals);
}

VectorXd encode_shared(const EnsembleModel &m, const dataset::MultistreamSample &sample) {
  return encode_shared(m, make_sequence_batch(sample)).col(0);
}

MatrixXd encoder_final_state(const EnsembleModel &m, std::size_t i, const SequenceBatch &batch) {
  check_batch(m, batch);
  return run_encoder(m.aes.at(i).encoder, m.aes[i].encoder_wiring, batch.streams[i], nullptr);
}

std::vector<std::vector<MatrixXd>> decode_ensemble(const EnsembleModel &m, const MatrixXd &latent,
                                                   Index length) {
  require(length >= 1, ErrorKind::InvalidArgument, "decode length must be >= 1");
  require(latent.rows() == m.latent_dim(), ErrorKind::Shape,
          "latent has " + std::to_string(latent.rows()) + " rows, expected " +
              std::to_string(m.latent_dim()));
  const auto h0 = decoder_initial_states(m, latent);
  std::vector<std::vector<MatrixXd>> out;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    out.push_back(run_decoder(m.aes[i].decoder, m.aes[i].decoder_wiring, h0[i], length, nullptr));
  }
  return out;
}

std::vector<Series> decode_ensemble(const EnsembleModel &m, const VectorXd &latent, Index length) {
  const auto slabs = decode_ensemble(m, MatrixXd(latent), length);
  std::vector<Series> out;
  for (std::size_t i = 0; i < slabs.size(); ++i) {
    Series s(length, m.config.input_dims[i]);
    for (Index t = 0; t < length; ++t) s.row(t) = slabs[i][static_cast<std::size_t>(t)].col(0).transpose();
    out.push_back(std::move(s));
  }
  return out;
}

double ensemble_loss(const EnsembleModel &m, const SequenceBatch &batch) {
  return forward(m, batch, false).loss;
}

LossAndGrad loss_and_grad(const EnsembleModel &m, const SequenceBatch &batch) {
  ForwardTrace tr = forward(m, batch, true);
  const Index len = batch.length();
  const double inv_b = 1.0 / static_cast<double>(batch.batch());
  LossAndGrad out{tr.loss, zeros_like(m)};
  EnsembleModel &g = out.grad;
  const Index eta = m.latent_dim();

  MatrixXd dz = m.config.l1_weight * inv_b * tr.latent.array().sign().matrix();
  std::vector<MatrixXd> dh0(m.aes.size());
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const auto &dec = tr.dec[i];
    std::vector<MatrixXd> dshat(static_cast<std::size_t>(len + 1));
    for (Index k = 1; k <= len; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      dshat[uk] = 2.0 * inv_b * (dec.shat[uk] - batch.streams[i][static_cast<std::size_t>(len - k)]);
    }
    dh0[i] = backprop_decoder(m.aes[i].decoder, m.config.skip[i], dec, dshat, g.aes[i].decoder);
  }

  Index off = 0;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const Index h = m.config.hidden[i];
    if (m.config.framework == Framework::Shared) {
      const MatrixXd dpre = (dh0[i].array() * (1.0 - tr.h0[i].array().square())).matrix();
      g.aes[i].init_map.noalias() += dpre * tr.latent.transpose();
      g.aes[i].init_bias += dpre.rowwise().sum();
      dz.noalias() += m.aes[i].init_map.transpose() * dpre;
    } else {
      dz.middleRows(off, h) += dh0[i];
    }
    off += h;
  }
  require(off == eta, ErrorKind::Shape, "latent layout mismatch");

  off = 0;
  for (std::size_t i = 0; i < m.aes.size(); ++i) {
    const Index h = m.config.hidden[i];
    const RecurrentTrace &enc = tr.enc[i];
    MatrixXd dfinal;
    if (m.config.framework == Framework::Shared) {
      g.aes[i].shared_proj.noalias() += dz.middleRows(off, h) * enc.h.back().transpose();
      dfinal = m.aes[i].shared_proj.transpose() * dz.middleRows(off, h);
    } else {
      dfinal = dz.middleRows(off, h);
    }
    backprop_encoder(m.aes[i].encoder, m.config.skip[i], enc, std::move(dfinal), g.aes[i].encoder);
    off += h;
  }
  return out;
}

}  // namespace painrnn::srnn
