// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "painrnn/common.hpp"

namespace painrnn::dtwfeat {

/// Optimal warping of two series. `path` holds 0-based (row of a, row of b)
/// pairs from (0,0) to (m-1,n-1) with unit steps (1,0), (0,1) or (1,1).
struct AlignmentResult {
  double cost = 0.0;      // sum of squared-Euclidean step costs along the path
  double distance = 0.0;  // cost^(1/theta)
  std::vector<std::pair<Index, Index>> path;
};

/// Squared Euclidean distance between row u of a and row v of b.
double step_cost(const Series &a, Index u, const Series &b, Index v);

/// Dynamic-programming DTW. Traceback prefers the diagonal, then a-advance,
/// then b-advance, so ties resolve deterministically.
AlignmentResult dtw(const Series &a, const Series &b, double theta = 2.0);

struct DbaResult {
  Series barycenter;
  /// Total DTW cost of the set against the barycenter: entry 0 for the
  /// initial reference, then one entry per refinement.
  std::vector<double> cost_history;
};

/// DTW barycenter averaging. The initial reference is the member whose length
/// is closest to `reference_length` (lowest index on ties), linearly resampled
/// to that length.
DbaResult dba(const std::vector<Series> &series, Index reference_length, int iterations);

/// Linear interpolation of `s` onto `length` evenly spaced rows.
Series resample(const Series &s, Index length);

}  // namespace painrnn::dtwfeat
