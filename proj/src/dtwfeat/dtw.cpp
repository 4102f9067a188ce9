// SPDX-License-Identifier: Apache-2.0
#include "painrnn/dtwfeat/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace painrnn::dtwfeat {

double step_cost(const Series &a, Index u, const Series &b, Index v) {
  return (a.row(u) - b.row(v)).squaredNorm();
}

AlignmentResult dtw(const Series &a, const Series &b, double theta) {
  require(a.rows() > 0 && b.rows() > 0, ErrorKind::InvalidArgument, "dtw: empty input series");
  require(a.cols() == b.cols(), ErrorKind::Shape, "dtw: series differ in channel count");
  require(theta > 0 && std::isfinite(theta), ErrorKind::InvalidArgument, "dtw: theta must be > 0");
  const Index m = a.rows();
  const Index n = b.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  MatrixXd acc(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        const double diag = (i > 0 && j > 0) ? acc(i - 1, j - 1) : inf;
        const double up = i > 0 ? acc(i - 1, j) : inf;
        const double left = j > 0 ? acc(i, j - 1) : inf;
        best = std::min({diag, up, left});
      }
      acc(i, j) = step_cost(a, i, b, j) + best;
    }
  }

  AlignmentResult res;
  res.cost = acc(m - 1, n - 1);
  res.distance = std::pow(res.cost, 1.0 / theta);
  Index i = m - 1, j = n - 1;
  res.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1);
      const double up = acc(i - 1, j);
      const double left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    res.path.emplace_back(i, j);
  }
  std::reverse(res.path.begin(), res.path.end());
  return res;
}

Series resample(const Series &s, Index length) {
  require(s.rows() >= 1 && length >= 1, ErrorKind::InvalidArgument, "resample: empty input");
  Series out(length, s.cols());
  if (s.rows() == 1 || length == 1) {
    out.rowwise() = s.row(0);
    return out;
  }
  const double scale = static_cast<double>(s.rows() - 1) / static_cast<double>(length - 1);
  for (Index r = 0; r < length; ++r) {
    const double pos = scale * static_cast<double>(r);
    const Index lo = std::min(static_cast<Index>(std::floor(pos)), s.rows() - 1);
    const Index hi = std::min(lo + 1, s.rows() - 1);
    const double frac = pos - static_cast<double>(lo);
    out.row(r) = (1.0 - frac) * s.row(lo) + frac * s.row(hi);
  }
  return out;
}

DbaResult dba(const std::vector<Series> &series, Index reference_length, int iterations) {
  require(!series.empty(), ErrorKind::InvalidArgument, "dba: empty series set");
  require(iterations >= 1, ErrorKind::InvalidArgument, "dba: iterations must be >= 1");
  require(reference_length >= 1, ErrorKind::InvalidArgument, "dba: reference length must be >= 1");
  const Index d = series[0].cols();
  for (const auto &s : series) {
    require(s.rows() >= 1 && s.cols() == d, ErrorKind::Shape, "dba: series differ in channel count");
  }

  std::size_t seed_idx = 0;
  for (std::size_t k = 1; k < series.size(); ++k) {
    if (std::abs(series[k].rows() - reference_length) < std::abs(series[seed_idx].rows() - reference_length)) {
      seed_idx = k;
    }
  }
  DbaResult res;
  res.barycenter = resample(series[seed_idx], reference_length);

  auto total_cost = [&series](const Series &ref) {
    double c = 0.0;
    for (const auto &s : series) c += dtw(s, ref).cost;
    return c;
  };
  res.cost_history.push_back(total_cost(res.barycenter));

  for (int it = 0; it < iterations; ++it) {
    Series sum = Series::Zero(reference_length, d);
    VectorXd count = VectorXd::Zero(reference_length);
    for (const auto &s : series) {
      const auto al = dtw(s, res.barycenter);
      for (const auto &[u, v] : al.path) {
        sum.row(v) += s.row(u);
        count(v) += 1.0;
      }
    }
    for (Index v = 0; v < reference_length; ++v) res.barycenter.row(v) = sum.row(v) / count(v);
    res.cost_history.push_back(total_cost(res.barycenter));
  }
  return res;
}

}  // namespace painrnn::dtwfeat
