// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "painrnn/common.hpp"

namespace painrnn::metrics {

// Label matrices are n x l with +1 marking a relevant label; score matrices
// are n x l with higher meaning more relevant. Rank ties go to the lower label
// index.

double hamming_loss(const MatrixXd &Y, const MatrixXd &Yhat);

/// `skipped` receives the number of instances without any relevant label.
double coverage(const MatrixXd &Y, const MatrixXd &scores, Index *skipped = nullptr);

/// Instances whose relevant or irrelevant set is empty are skipped.
double ranking_loss(const MatrixXd &Y, const MatrixXd &scores, Index *skipped = nullptr);

/// Mean Jaccard index of the positive sets; an empty union counts as 1.
double example_based_accuracy(const MatrixXd &Y, const MatrixXd &Yhat);

/// Mean per-instance F1 of the positive sets, in percent. Two empty sets count as 100.
double f_measure_multilabel(const MatrixXd &Y, const MatrixXd &Yhat);

/// 1-based rank of every label of one score row.
std::vector<Index> label_ranks(const VectorXd &scores);

struct BinaryScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Fractions in [0,1]; any zero denominator yields 0.
BinaryScores precision_recall_f1_binary(long long tp, long long fp, long long fn);

struct Confusion {
  long long tp = 0, fp = 0, fn = 0, tn = 0;

  void add(bool truth, bool predicted);
  BinaryScores scores() const { return precision_recall_f1_binary(tp, fp, fn); }
};

/// Mean and normal-approximation 95% half-width (1.96 s / sqrt(r)).
struct Summary {
  double mean = 0;
  double half_width = 0;
  bool single_repetition = false;  // half-width forced to 0
};

Summary summarize(const std::vector<double> &values);

}  // namespace painrnn::metrics
