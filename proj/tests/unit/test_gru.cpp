// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "painrnn/srnn/gru.hpp"

using namespace painrnn;
using namespace painrnn::srnn;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

MatrixXd rnd(Index r, Index c, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = u(rng);
  return m;
}

GruCellParams random_cell(Index in, Index hid, std::mt19937_64 &rng) {
  GruCellParams p = GruCellParams::zeros(in, hid);
  p.Wz = rnd(hid, in, rng);
  p.Wr = rnd(hid, in, rng);
  p.Wh = rnd(hid, in, rng);
  p.Uz = rnd(hid, hid, rng);
  p.Ur = rnd(hid, hid, rng);
  p.Uh = rnd(hid, hid, rng);
  p.bz = rnd(hid, 1, rng);
  p.br = rnd(hid, 1, rng);
  p.bh = rnd(hid, 1, rng);
  return p;
}

// Element-by-element evaluation of one GRU step for a single sample.
VectorXd scalar_gru(const GruCellParams &p, const VectorXd &x, const VectorXd &h) {
  const Index H = p.hidden();
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
    z(i) = sig(az);
    r(i) = sig(ar);
  }
  for (Index i = 0; i < H; ++i) {
    double ah = p.bh(i);
    for (Index j = 0; j < x.size(); ++j) ah += p.Wh(i, j) * x(j);
    for (Index j = 0; j < H; ++j) ah += p.Uh(i, j) * r(j) * h(j);
    out(i) = z(i) * std::tanh(ah) + (1.0 - z(i)) * h(i);
  }
  return out;
}

}  // namespace

TEST_CASE("zero cell from zero state stays at zero") {
  const auto p = GruCellParams::zeros(3, 4);
  const MatrixXd h = gru_encoder_step(p, MatrixXd::Random(3, 1), MatrixXd::Zero(4, 1));
  CHECK(h.isZero(0.0));
}

TEST_CASE("zero cell halves the previous state") {
  const auto p = GruCellParams::zeros(2, 3);
  MatrixXd v(3, 1);
  v << 0.4, -0.8, 0.2;
  const MatrixXd h = gru_encoder_step(p, MatrixXd::Zero(2, 1), v);
  CHECK((h - 0.5 * v).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("one-dimensional update gate example") {
  auto p = GruCellParams::zeros(1, 1);
  p.Wz(0, 0) = 1.0;
  p.Uz(0, 0) = 1.0;
  const MatrixXd h = gru_encoder_step(p, MatrixXd::Zero(1, 1), MatrixXd::Constant(1, 1, 0.5));
  const double z = sig(0.5);
  CHECK(h(0, 0) == doctest::Approx((1.0 - z) * 0.5).epsilon(1e-14));
  CHECK(h(0, 0) == doctest::Approx(0.1888).epsilon(1e-3));
}

TEST_CASE("batched step matches the scalar oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index in = 1 + static_cast<Index>(rng() % 5), hid = 1 + static_cast<Index>(rng() % 6);
    const auto p = random_cell(in, hid, rng);
    const MatrixXd x = rnd(in, 3, rng), h = rnd(hid, 3, rng);
    const MatrixXd out = gru_encoder_step(p, x, h);
    for (Index b = 0; b < 3; ++b)
      CHECK((out.col(b) - scalar_gru(p, x.col(b), h.col(b))).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("decoder step gates on the embedded previous output") {
  std::mt19937_64 rng(5);
  auto d = DecoderCellParams::zeros(3, 4);
  d.cell = random_cell(3, 4, rng);
  d.embed = rnd(3, 3, rng);
  d.readout = rnd(3, 4, rng);
  d.readout_bias = rnd(3, 1, rng);
  const MatrixXd s = rnd(3, 1, rng), h = rnd(4, 1, rng);
  const auto [h_new, s_hat] = gru_decoder_step(d, s, h);
  const VectorXd expect_h = scalar_gru(d.cell, d.embed * s, h);
  CHECK((h_new.col(0) - expect_h).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((s_hat.col(0) - (d.readout * expect_h + d.readout_bias)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("states stay inside the open unit interval") {
  std::mt19937_64 rng(11);
  auto p = random_cell(4, 5, rng);
  p.Wh *= 50.0;
  MatrixXd h = MatrixXd::Zero(5, 2);
  for (int t = 0; t < 200; ++t) {
    h = gru_encoder_step(p, 10.0 * rnd(4, 2, rng), h);
    CHECK(h.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("shape and finiteness errors") {
  const auto p = GruCellParams::zeros(3, 4);
  CHECK_THROWS_AS(gru_encoder_step(p, MatrixXd::Zero(2, 1), MatrixXd::Zero(4, 1)), Error);
  CHECK_THROWS_AS(gru_encoder_step(p, MatrixXd::Zero(3, 1), MatrixXd::Zero(3, 1)), Error);
  MatrixXd bad = MatrixXd::Zero(3, 1);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(gru_encoder_step(p, bad, MatrixXd::Zero(4, 1)), Error);
}

TEST_CASE("sparse mixing") {
  MatrixXd a(2, 1), b(2, 1);
  a << 1.0, 2.0;
  b << 3.0, -2.0;
  CHECK(sparse_mix(a, b, {true, false}) == a);
  CHECK(sparse_mix(a, b, {false, true}) == b);
  CHECK(sparse_mix(a, b, {true, true}) == 0.5 * (a + b));
  CHECK(sparse_mix(a, MatrixXd(), {true, false}) == a);
}

TEST_CASE("sampled wiring never drops both paths") {
  std::mt19937_64 rng(1);
  const auto w = sample_wiring(3, 3000, rng);
  CHECK(w.capacity() == 3000);
  int counts[3] = {0, 0, 0};
  for (Index t = 1; t <= w.capacity(); ++t) {
    const auto s = w.at(t);
    CHECK(s.active() >= 1);
    if (t <= 3) CHECK(s == WiringStep{true, false});
    const auto raw = w.steps[static_cast<std::size_t>(t - 1)];
    counts[raw.recent && raw.skip ? 2 : raw.skip ? 1 : 0]++;
  }
  for (int c : counts) CHECK(c > 800);
  const auto dense = dense_wiring(2, 10);
  for (Index t = 1; t <= 10; ++t) CHECK(dense.at(t) == WiringStep{true, false});
}

TEST_CASE("cell backward matches finite differences") {
  std::mt19937_64 rng(17);
  const auto p = random_cell(3, 4, rng);
  const MatrixXd x = rnd(3, 2, rng), h = rnd(4, 2, rng), w = rnd(4, 2, rng);
  GruCache cache;
  gru_cell_forward(p, x, h, &cache);
  auto grad = GruCellParams::zeros(3, 4);
  MatrixXd dh, dx;
  gru_cell_backward(p, cache, w, grad, dh, &dx);
  auto loss = [&](const GruCellParams &q, const MatrixXd &xx, const MatrixXd &hh) {
    return (gru_cell_forward(q, xx, hh).array() * w.array()).sum();
  };
  const double eps = 1e-6;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) {
      auto a = p, b = p;
      a.Wh(i, j) += eps;
      b.Wh(i, j) -= eps;
      CHECK(grad.Wh(i, j) == doctest::Approx((loss(a, x, h) - loss(b, x, h)) / (2 * eps)).epsilon(1e-6));
    }
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 2; ++j) {
      MatrixXd ha = h, hb = h;
      ha(i, j) += eps;
      hb(i, j) -= eps;
      CHECK(dh(i, j) == doctest::Approx((loss(p, x, ha) - loss(p, x, hb)) / (2 * eps)).epsilon(1e-6));
    }
  for (Index i = 0; i < 3; ++i) {
    MatrixXd xa = x, xb = x;
    xa(i, 1) += eps;
    xb(i, 1) -= eps;
    CHECK(dx(i, 1) == doctest::Approx((loss(p, xa, h) - loss(p, xb, h)) / (2 * eps)).epsilon(1e-6));
  }
}
