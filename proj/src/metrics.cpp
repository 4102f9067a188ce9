// SPDX-License-Identifier: Apache-2.0
#include "painrnn/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace painrnn::metrics {

namespace {

void check_shapes(const MatrixXd &a, const MatrixXd &b, const char *what) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape,
          std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()) + ")");
  require(a.rows() > 0, ErrorKind::InvalidArgument, std::string(what) + ": no instances");
}

bool relevant(double v) { return v > 0.0; }

// Label a is ranked above label b.
bool above(const VectorXd &s, Index a, Index b) { return s(a) > s(b) || (s(a) == s(b) && a < b); }

}  // namespace

double hamming_loss(const MatrixXd &Y, const MatrixXd &Yhat) {
  check_shapes(Y, Yhat, "hamming_loss");
  double total = 0.0;
  for (Index i = 0; i < Y.rows(); ++i) {
    Index diff = 0;
    for (Index j = 0; j < Y.cols(); ++j) diff += relevant(Y(i, j)) != relevant(Yhat(i, j));
    total += static_cast<double>(diff) / static_cast<double>(Y.cols());
  }
  return total / static_cast<double>(Y.rows());
}

std::vector<Index> label_ranks(const VectorXd &scores) {
  std::vector<Index> ranks(static_cast<std::size_t>(scores.size()), 1);
  for (Index j = 0; j < scores.size(); ++j)
    for (Index k = 0; k < scores.size(); ++k)
      if (k != j && above(scores, k, j)) ++ranks[static_cast<std::size_t>(j)];
  return ranks;
}

double coverage(const MatrixXd &Y, const MatrixXd &scores, Index *skipped) {
  check_shapes(Y, scores, "coverage");
  require(scores.allFinite(), ErrorKind::NonFinite, "coverage: non-finite scores");
  double total = 0.0;
  Index used = 0, skip = 0;
  for (Index i = 0; i < Y.rows(); ++i) {
    const VectorXd s = scores.row(i).transpose();
    const auto ranks = label_ranks(s);
    Index worst = 0;
    for (Index j = 0; j < Y.cols(); ++j)
      if (relevant(Y(i, j))) worst = std::max(worst, ranks[static_cast<std::size_t>(j)]);
    if (worst == 0) {
      ++skip;
      continue;
    }
    total += static_cast<double>(worst - 1);
    ++used;
  }
  if (skipped) *skipped = skip;
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double ranking_loss(const MatrixXd &Y, const MatrixXd &scores, Index *skipped) {
  check_shapes(Y, scores, "ranking_loss");
  require(scores.allFinite(), ErrorKind::NonFinite, "ranking_loss: non-finite scores");
  double total = 0.0;
  Index used = 0, skip = 0;
  for (Index i = 0; i < Y.rows(); ++i) {
    const VectorXd s = scores.row(i).transpose();
    Index pos = 0, neg = 0, bad = 0;
    for (Index a = 0; a < Y.cols(); ++a) {
      if (!relevant(Y(i, a))) {
        ++neg;
        continue;
      }
      ++pos;
      for (Index b = 0; b < Y.cols(); ++b)
        if (!relevant(Y(i, b)) && above(s, b, a)) ++bad;
    }
    if (pos == 0 || neg == 0) {
      ++skip;
      continue;
    }
    total += static_cast<double>(bad) / static_cast<double>(pos * neg);
    ++used;
  }
  if (skipped) *skipped = skip;
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double example_based_accuracy(const MatrixXd &Y, const MatrixXd &Yhat) {
  check_shapes(Y, Yhat, "example_based_accuracy");
  double total = 0.0;
  for (Index i = 0; i < Y.rows(); ++i) {
    Index inter = 0, uni = 0;
    for (Index j = 0; j < Y.cols(); ++j) {
      const bool a = relevant(Y(i, j)), b = relevant(Yhat(i, j));
      inter += a && b;
      uni += a || b;
    }
    total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return total / static_cast<double>(Y.rows());
}

double f_measure_multilabel(const MatrixXd &Y, const MatrixXd &Yhat) {
  check_shapes(Y, Yhat, "f_measure");
  double total = 0.0;
  for (Index i = 0; i < Y.rows(); ++i) {
    Index inter = 0, sizes = 0;
    for (Index j = 0; j < Y.cols(); ++j) {
      const bool a = relevant(Y(i, j)), b = relevant(Yhat(i, j));
      inter += a && b;
      sizes += static_cast<Index>(a) + static_cast<Index>(b);
    }
    total += sizes == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sizes);
  }
  return 100.0 * total / static_cast<double>(Y.rows());
}

BinaryScores precision_recall_f1_binary(long long tp, long long fp, long long fn) {
  require(tp >= 0 && fp >= 0 && fn >= 0, ErrorKind::InvalidArgument, "binary scores: negative count");
  BinaryScores s;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision + s.recall > 0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

void Confusion::add(bool truth, bool predicted) {
  if (truth && predicted) ++tp;
  else if (!truth && predicted) ++fp;
  else if (truth && !predicted) ++fn;
  else ++tn;
}

Summary summarize(const std::vector<double> &values) {
  require(!values.empty(), ErrorKind::InvalidArgument, "summarize: no values");
  Summary s;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double r = static_cast<double>(values.size());
  s.mean = sum / r;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    s.mean = values.front();
  }
  if (values.size() == 1) {
    s.single_repetition = true;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.half_width = 1.96 * std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
  return s;
}

}  // namespace painrnn::metrics
