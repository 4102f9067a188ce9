// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "painrnn/dataset.hpp"
#include "painrnn/dtwfeat/features.hpp"
#include "painrnn/glocal.hpp"
#include "painrnn/metrics.hpp"
#include "painrnn/serialize.hpp"
#include "painrnn/srnn/ensemble.hpp"
#include "painrnn/srnn/head.hpp"
#include "painrnn/srnn/train.hpp"

namespace painrnn::pipeline {

enum class Task { MultiLabel, Binary };

std::string to_string(Task t);
Task parse_task(const std::string &text);

/// One ablation cell: training framework and whether hand-crafted features
/// are fused into the classifier input.
struct Cell {
  srnn::Framework framework = srnn::Framework::Shared;
  bool handcrafted = true;

  std::string name() const;  // "SF-HC", "IF-noHC", ...
  bool operator==(const Cell &) const = default;
};

Cell parse_cell(const std::string &text);
/// Comma-separated cells, or "all" for the four-cell matrix.
std::vector<Cell> parse_cells(const std::string &text);

struct FeatureConfig {
  int bins = 16;
  double theta = 2.0;
  int dba_iterations = 10;
};

struct PipelineConfig {
  srnn::EnsembleConfig model;
  srnn::TrainConfig train;
  srnn::HeadTrainConfig head;
  glocal::GlocalConfig glocal;
  glocal::SoftmaxConfig softmax;
  glocal::LabelCodec codec;
  FeatureConfig features;
  Task task = Task::MultiLabel;
  std::vector<Cell> cells{Cell{}};
  int repetitions = 5;
  std::uint64_t seed = 1;
};

/// Per-row affine standardization fit on training columns. Constant rows map to 0.
struct Standardizer {
  VectorXd mean;
  VectorXd scale;

  static Standardizer fit(const MatrixXd &columns);
  MatrixXd apply(const MatrixXd &columns) const;
};

/// latent_dim x n, one full-length encoding per sample.
MatrixXd latent_matrix(const srnn::EnsembleModel &m, const dataset::Dataset &ds);
/// 8 x n.
MatrixXd feature_matrix(const dtwfeat::FeatureExtractor &fx, const dataset::Dataset &ds);
/// n x labels in {-1,+1}.
MatrixXd label_matrix(const dataset::Dataset &ds, const glocal::LabelCodec &codec);

/// Fusion head plus the task's classifier, fit on frozen training latents.
struct Classifier {
  Task task = Task::MultiLabel;
  bool handcrafted = true;
  glocal::LabelCodec codec;
  srnn::FusionHead head;
  Standardizer feature_scaler;  // empty without hand-crafted features
  glocal::GlocalModel glocal;   // multi-label task
  glocal::SoftmaxHead softmax;  // binary task
};

/// `features` is 8 x n (ignored unless `handcrafted`).
Classifier fit_classifier(const MatrixXd &latents, const MatrixXd &features,
                          const dataset::Dataset &train, const PipelineConfig &cfg, bool handcrafted,
                          std::uint64_t seed);

/// Fused classifier input (80 or 88 rows) per column.
MatrixXd fused_inputs(const Classifier &c, const MatrixXd &latents, const MatrixXd &features);

struct Prediction {
  VectorXd scores;  // label scores (multi-label) or class probabilities (binary)
  int pain_class = 0;
  bool protective = false;
};

std::vector<Prediction> predict(const Classifier &c, const MatrixXd &latents, const MatrixXd &features);

serialize::Json to_json(const Classifier &c);
Classifier classifier_from_json(const serialize::Json &j);

struct SamplePrediction {
  int repetition = 0;
  std::string subject_id;
  std::string trial_file;
  int true_pain_class = 0;
  bool true_protective = false;
  Prediction prediction;
};

struct FoldValues {
  int repetition = 0;
  std::string test_subject;
  std::vector<double> values;  // one per metric
};

struct CellReport {
  std::string method;
  std::vector<metrics::Summary> summaries;          // one per metric
  std::vector<std::vector<double>> per_repetition;  // [rep][metric]
  std::vector<FoldValues> folds;
  std::vector<SamplePrediction> predictions;
};

struct EvalReport {
  Task task = Task::MultiLabel;
  int repetitions = 0;
  std::vector<std::string> metric_names;
  std::vector<CellReport> cells;
};

/// HL, Cvg, Rkl, EbA, F1 or Precision, Recall, F1 (both F1 forms in percent).
std::vector<std::string> metric_names(Task t);

/// Metric values of a pooled prediction set, ordered as metric_names(task).
std::vector<double> evaluate_predictions(const std::vector<SamplePrediction> &preds, Task task,
                                         const glocal::LabelCodec &codec);

using Progress = std::function<void(const std::string &)>;

/// Leave-one-subject-out evaluation of every configured cell, repeated with
/// derived seeds. Normalization, references, feature binning, and all model
/// fitting use the training fold only. Cells sharing a framework share one
/// trained ensemble per fold and repetition.
EvalReport cross_validate(const dataset::Dataset &raw, const PipelineConfig &cfg,
                          const Progress &progress = {});

std::string report_to_csv(const EvalReport &r);
serialize::Json report_to_json(const EvalReport &r);

}  // namespace painrnn::pipeline
