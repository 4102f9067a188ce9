// SPDX-License-Identifier: Apache-2.0
#include "painrnn/srnn/gru.hpp"

#include <string>

namespace painrnn::srnn {

namespace {

MatrixXd sigmoid(const MatrixXd &a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

}  // namespace

GruCellParams GruCellParams::zeros(Index input, Index hidden) {
  GruCellParams p;
  p.Wz = p.Wr = p.Wh = MatrixXd::Zero(hidden, input);
  p.Uz = p.Ur = p.Uh = MatrixXd::Zero(hidden, hidden);
  p.bz = p.br = p.bh = VectorXd::Zero(hidden);
  return p;
}

DecoderCellParams DecoderCellParams::zeros(Index input, Index hidden) {
  DecoderCellParams p;
  p.cell = GruCellParams::zeros(input, hidden);
  p.embed = MatrixXd::Zero(input, input);
  p.readout = MatrixXd::Zero(input, hidden);
  p.readout_bias = VectorXd::Zero(input);
  return p;
}

void check_shapes(const GruCellParams &p) {
  const Index h = p.Uz.rows();
  const Index d = p.Wz.cols();
  const bool ok = p.Wz.rows() == h && p.Wr.rows() == h && p.Wh.rows() == h && p.Wr.cols() == d &&
                  p.Wh.cols() == d && p.Uz.cols() == h && p.Ur.rows() == h && p.Ur.cols() == h &&
                  p.Uh.rows() == h && p.Uh.cols() == h && p.bz.size() == h && p.br.size() == h &&
                  p.bh.size() == h;
  require(ok, ErrorKind::Shape, "GRU cell parameter shapes are inconsistent");
}

void check_shapes(const DecoderCellParams &p) {
  check_shapes(p.cell);
  const Index d = p.cell.input();
  require(p.embed.rows() == d && p.embed.cols() == d && p.readout.rows() == d &&
              p.readout.cols() == p.cell.hidden() && p.readout_bias.size() == d,
          ErrorKind::Shape, "decoder embedding/readout shapes are inconsistent");
}

WiringStep SparseWiring::at(Index t) const {
  if (t <= skip_length) return {true, false};
  require(t <= capacity(), ErrorKind::InvalidArgument,
          "sequence step " + std::to_string(t) + " exceeds sparse wiring capacity " +
              std::to_string(capacity()));
  return steps[static_cast<std::size_t>(t - 1)];
}

SparseWiring sample_wiring(int skip_length, Index length, std::mt19937_64 &rng) {
  require(skip_length >= 1, ErrorKind::InvalidArgument, "skip length must be >= 1");
  static constexpr WiringStep choices[3] = {{true, false}, {false, true}, {true, true}};
  std::uniform_int_distribution<int> pick(0, 2);
  SparseWiring w;
  w.skip_length = skip_length;
  w.steps.reserve(static_cast<std::size_t>(length));
  for (Index t = 0; t < length; ++t) w.steps.push_back(choices[pick(rng)]);
  return w;
}

SparseWiring dense_wiring(int skip_length, Index length) {
  SparseWiring w;
  w.skip_length = skip_length;
  w.steps.assign(static_cast<std::size_t>(length), WiringStep{true, false});
  return w;
}

MatrixXd gru_cell_forward(const GruCellParams &p, const MatrixXd &x, const MatrixXd &hprev,
                          GruCache *cache) {
  MatrixXd az = p.Wz * x + p.Uz * hprev;
  az.colwise() += p.bz;
  MatrixXd ar = p.Wr * x + p.Ur * hprev;
  ar.colwise() += p.br;
  const MatrixXd z = sigmoid(az);
  const MatrixXd r = sigmoid(ar);
  MatrixXd rh = r.cwiseProduct(hprev);
  MatrixXd ah = p.Wh * x + p.Uh * rh;
  ah.colwise() += p.bh;
  MatrixXd cand = ah.array().tanh().matrix();
  MatrixXd h = (z.array() * cand.array() + (1.0 - z.array()) * hprev.array()).matrix();
  if (cache) {
    cache->x = x;
    cache->hprev = hprev;
    cache->z = z;
    cache->r = r;
    cache->cand = std::move(cand);
    cache->rh = std::move(rh);
  }
  return h;
}

void gru_cell_backward(const GruCellParams &p, const GruCache &c, const MatrixXd &dout,
                       GruCellParams &g, MatrixXd &dhprev, MatrixXd *dx) {
  const auto z = c.z.array();
  const auto r = c.r.array();
  const auto cand = c.cand.array();
  const MatrixXd dah = (dout.array() * z * (1.0 - cand.square())).matrix();
  const MatrixXd daz = (dout.array() * (cand - c.hprev.array()) * z * (1.0 - z)).matrix();
  dhprev = (dout.array() * (1.0 - z)).matrix();

  g.Wh.noalias() += dah * c.x.transpose();
  g.Uh.noalias() += dah * c.rh.transpose();
  g.bh += dah.rowwise().sum();
  const MatrixXd drh = p.Uh.transpose() * dah;
  dhprev.array() += drh.array() * r;
  const MatrixXd dar = (drh.array() * c.hprev.array() * r * (1.0 - r)).matrix();

  g.Wr.noalias() += dar * c.x.transpose();
  g.Ur.noalias() += dar * c.hprev.transpose();
  g.br += dar.rowwise().sum();
  g.Wz.noalias() += daz * c.x.transpose();
  g.Uz.noalias() += daz * c.hprev.transpose();
  g.bz += daz.rowwise().sum();
  dhprev.noalias() += p.Ur.transpose() * dar;
  dhprev.noalias() += p.Uz.transpose() * daz;
  if (dx) {
    *dx = p.Wh.transpose() * dah;
    dx->noalias() += p.Wr.transpose() * dar;
    dx->noalias() += p.Wz.transpose() * daz;
  }
}

MatrixXd gru_encoder_step(const GruCellParams &p, const MatrixXd &s_t, const MatrixXd &h_prev) {
  check_shapes(p);
  require(s_t.rows() == p.input() && h_prev.rows() == p.hidden() && s_t.cols() == h_prev.cols(),
          ErrorKind::Shape, "encoder step: input/state shape mismatch");
  require(s_t.allFinite() && h_prev.allFinite(), ErrorKind::NonFinite,
          "encoder step: non-finite input");
  return gru_cell_forward(p, s_t, h_prev);
}

std::pair<MatrixXd, MatrixXd> gru_decoder_step(const DecoderCellParams &p, const MatrixXd &s_prev,
                                               const MatrixXd &h_prev) {
  check_shapes(p);
  require(s_prev.rows() == p.output() && h_prev.rows() == p.hidden() &&
              s_prev.cols() == h_prev.cols(),
          ErrorKind::Shape, "decoder step: input/state shape mismatch");
  MatrixXd h = gru_cell_forward(p.cell, p.embed * s_prev, h_prev);
  MatrixXd s = p.readout * h;
  s.colwise() += p.readout_bias;
  return {std::move(h), std::move(s)};
}

MatrixXd sparse_mix(const MatrixXd &recent_out, const MatrixXd &skip_out, WiringStep w) {
  require(w.active() >= 1, ErrorKind::InvalidArgument,
          "sparse wiring (0,0) leaves the hidden state undefined");
  if (!w.skip) return recent_out;
  if (!w.recent) return skip_out;
  require(recent_out.rows() == skip_out.rows() && recent_out.cols() == skip_out.cols(),
          ErrorKind::Shape, "sparse_mix: operand shape mismatch");
  return (recent_out + skip_out) / 2.0;
}

}  // namespace painrnn::srnn
