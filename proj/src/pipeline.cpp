// SPDX-License-Identifier: Apache-2.0
#include "painrnn/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "painrnn/text.hpp"

namespace painrnn::pipeline {

std::string to_string(Task t) { return t == Task::Binary ? "binary" : "multilabel"; }

Task parse_task(const std::string &text) {
  if (text == "multilabel") return Task::MultiLabel;
  if (text == "binary") return Task::Binary;
  fail(ErrorKind::InvalidArgument, "unknown task '" + text + "' (expected multilabel or binary)");
}

std::string Cell::name() const {
  return srnn::to_string(framework) + (handcrafted ? "-HC" : "-noHC");
}

Cell parse_cell(const std::string &text) {
  const auto dash = text.find('-');
  require(dash != std::string::npos, ErrorKind::InvalidArgument,
          "unknown ablation '" + text + "' (expected SF-HC, SF-noHC, IF-HC or IF-noHC)");
  const std::string fw = text.substr(0, dash), hc = text.substr(dash + 1);
  require((fw == "SF" || fw == "IF") && (hc == "HC" || hc == "noHC"), ErrorKind::InvalidArgument,
          "unknown ablation '" + text + "' (expected SF-HC, SF-noHC, IF-HC or IF-noHC)");
  return Cell{srnn::parse_framework(fw), hc == "HC"};
}

std::vector<Cell> parse_cells(const std::string &text) {
  if (text::trim(text) == "all") {
    return {{srnn::Framework::Shared, true},
            {srnn::Framework::Shared, false},
            {srnn::Framework::Independent, true},
            {srnn::Framework::Independent, false}};
  }
  std::vector<Cell> cells;
  for (const auto &part : text::split(text, ',')) {
    const Cell c = parse_cell(text::trim(part));
    require(std::find(cells.begin(), cells.end(), c) == cells.end(), ErrorKind::InvalidArgument,
            "ablation '" + c.name() + "' listed twice");
    cells.push_back(c);
  }
  require(!cells.empty(), ErrorKind::InvalidArgument, "empty ablation list");
  return cells;
}

Standardizer Standardizer::fit(const MatrixXd &columns) {
  require(columns.cols() >= 1, ErrorKind::InvalidArgument, "standardizer: no samples");
  Standardizer s;
  s.mean = columns.rowwise().mean();
  const VectorXd var = (columns.colwise() - s.mean).array().square().rowwise().mean();
  s.scale = VectorXd(var.size());
  for (Index i = 0; i < var.size(); ++i) s.scale(i) = var(i) > 0 ? 1.0 / std::sqrt(var(i)) : 0.0;
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd &columns) const {
  require(columns.rows() == mean.size(), ErrorKind::Shape, "standardizer: row count mismatch");
  return ((columns.colwise() - mean).array().colwise() * scale.array()).matrix();
}

MatrixXd latent_matrix(const srnn::EnsembleModel &m, const dataset::Dataset &ds) {
  MatrixXd Z(m.latent_dim(), static_cast<Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) Z.col(static_cast<Index>(i)) = srnn::encode_shared(m, ds.samples[i]);
  return Z;
}

MatrixXd feature_matrix(const dtwfeat::FeatureExtractor &fx, const dataset::Dataset &ds) {
  MatrixXd F(static_cast<Index>(dtwfeat::kFeatureCount), static_cast<Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = dtwfeat::extract_feature_vector(ds.samples[i], fx);
    F.col(static_cast<Index>(i)) = Eigen::Map<const VectorXd>(f.values.data(), F.rows());
  }
  return F;
}

MatrixXd label_matrix(const dataset::Dataset &ds, const glocal::LabelCodec &codec) {
  MatrixXd Y(static_cast<Index>(ds.size()), codec.label_count());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Y.row(static_cast<Index>(i)) = codec.encode(ds.samples[i].pain_level, ds.samples[i].protective).transpose();
  }
  return Y;
}

Classifier fit_classifier(const MatrixXd &latents, const MatrixXd &features,
                          const dataset::Dataset &train, const PipelineConfig &cfg, bool handcrafted,
                          std::uint64_t seed) {
  const Index n = static_cast<Index>(train.size());
  require(latents.cols() == n, ErrorKind::Shape, "classifier: latent count does not match the dataset");
  require(!handcrafted || features.cols() == n, ErrorKind::Shape,
          "classifier: feature count does not match the dataset");
  Classifier c;
  c.task = cfg.task;
  c.handcrafted = handcrafted;
  c.codec = cfg.codec;
  c.head = srnn::make_head(latents.rows(), 160, 80, 0.5, mix_seed(seed, 1));
  MatrixXd F(0, n);
  if (handcrafted) {
    c.feature_scaler = Standardizer::fit(features);
    F = c.feature_scaler.apply(features);
  }

  srnn::HeadTrainConfig hcfg = cfg.head;
  hcfg.seed = mix_seed(seed, 2);
  const MatrixXd Y = label_matrix(train, c.codec);
  MatrixXd targets;
  if (c.task == Task::Binary) {
    targets.resize(1, n);
    for (Index i = 0; i < n; ++i) targets(0, i) = train.samples[static_cast<std::size_t>(i)].protective ? 1.0 : 0.0;
  } else {
    targets = Y.transpose();
  }
  srnn::train_head(c.head, latents, F, targets,
                   c.task == Task::Binary ? srnn::HeadTask::Binary : srnn::HeadTask::MultiLabel, hcfg);

  const MatrixXd X = srnn::fuse_batch(c.head, latents, F).transpose();
  if (c.task == Task::Binary) {
    std::vector<bool> y;
    for (const auto &s : train.samples) y.push_back(s.protective);
    c.softmax = glocal::fit_binary_softmax(X, y, cfg.softmax);
  } else {
    glocal::GlocalConfig gcfg = cfg.glocal;
    gcfg.seed = mix_seed(seed, 3);
    c.glocal = glocal::fit_glocal(X, Y, gcfg);
  }
  return c;
}

MatrixXd fused_inputs(const Classifier &c, const MatrixXd &latents, const MatrixXd &features) {
  if (!c.handcrafted) return srnn::fuse_batch(c.head, latents, MatrixXd(0, latents.cols()));
  require(features.cols() == latents.cols(), ErrorKind::Shape, "classifier: feature/latent count mismatch");
  return srnn::fuse_batch(c.head, latents, c.feature_scaler.apply(features));
}

std::vector<Prediction> predict(const Classifier &c, const MatrixXd &latents, const MatrixXd &features) {
  const MatrixXd X = fused_inputs(c, latents, features);
  std::vector<Prediction> out;
  for (Index j = 0; j < X.cols(); ++j) {
    Prediction p;
    if (c.task == Task::Binary) {
      const auto b = glocal::predict_binary(c.softmax, X.col(j));
      p.scores = b.probabilities;
      p.protective = b.protective;
    } else {
      const auto m = glocal::predict_multilabel(c.glocal, c.codec, X.col(j));
      p.scores = m.scores;
      p.pain_class = m.decoded.pain_class;
      p.protective = m.decoded.protective;
    }
    out.push_back(std::move(p));
  }
  return out;
}

serialize::Json to_json(const Classifier &c) {
  serialize::Json j{{"task", to_string(c.task)},
                    {"handcrafted", c.handcrafted},
                    {"banded", c.codec.banded},
                    {"head", serialize::to_json(c.head)}};
  if (c.handcrafted) {
    j["feature_scaler"] = {{"mean", serialize::vector_to_json(c.feature_scaler.mean)},
                           {"scale", serialize::vector_to_json(c.feature_scaler.scale)}};
  }
  if (c.task == Task::Binary) {
    j["softmax"] = serialize::to_json(c.softmax);
  } else {
    j["glocal"] = serialize::to_json(c.glocal);
  }
  return j;
}

Classifier classifier_from_json(const serialize::Json &j) {
  try {
    Classifier c;
    c.task = parse_task(j.at("task").get<std::string>());
    c.handcrafted = j.at("handcrafted").get<bool>();
    c.codec.banded = j.at("banded").get<bool>();
    c.head = serialize::head_from_json(j.at("head"));
    if (c.handcrafted) {
      c.feature_scaler.mean = serialize::vector_from_json(j.at("feature_scaler").at("mean"), "mean");
      c.feature_scaler.scale = serialize::vector_from_json(j.at("feature_scaler").at("scale"), "scale");
    }
    if (c.task == Task::Binary) {
      c.softmax = serialize::softmax_from_json(j.at("softmax"));
    } else {
      c.glocal = serialize::glocal_from_json(j.at("glocal"));
    }
    return c;
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::Format, std::string("classifier checkpoint: ") + e.what());
  }
}

std::vector<std::string> metric_names(Task t) {
  if (t == Task::Binary) return {"Precision", "Recall", "F1"};
  return {"HL", "Cvg", "Rkl", "EbA", "F1"};
}

std::vector<double> evaluate_predictions(const std::vector<SamplePrediction> &preds, Task task,
                                         const glocal::LabelCodec &codec) {
  require(!preds.empty(), ErrorKind::InvalidArgument, "evaluate: no predictions");
  if (task == Task::Binary) {
    metrics::Confusion cm;
    for (const auto &p : preds) cm.add(p.true_protective, p.prediction.protective);
    const auto s = cm.scores();
    return {100.0 * s.precision, 100.0 * s.recall, 100.0 * s.f1};
  }
  const Index n = static_cast<Index>(preds.size());
  const Index l = codec.label_count();
  MatrixXd Y = MatrixXd::Constant(n, l, -1.0);
  MatrixXd Yhat = MatrixXd::Constant(n, l, -1.0);
  MatrixXd S(n, l);
  for (Index i = 0; i < n; ++i) {
    const auto &p = preds[static_cast<std::size_t>(i)];
    Y(i, p.true_pain_class) = 1.0;
    Y(i, l - 1) = p.true_protective ? 1.0 : -1.0;
    Yhat(i, p.prediction.pain_class) = 1.0;
    Yhat(i, l - 1) = p.prediction.protective ? 1.0 : -1.0;
    S.row(i) = p.prediction.scores.transpose();
  }
  return {metrics::hamming_loss(Y, Yhat), metrics::coverage(Y, S), metrics::ranking_loss(Y, S),
          metrics::example_based_accuracy(Y, Yhat), metrics::f_measure_multilabel(Y, Yhat)};
}

namespace {

struct PreparedFold {
  std::string test_subject;
  dataset::Dataset train, test;
  MatrixXd train_features, test_features;
};

}  // namespace

EvalReport cross_validate(const dataset::Dataset &raw, const PipelineConfig &cfg, const Progress &progress) {
  require(cfg.repetitions >= 1, ErrorKind::InvalidArgument, "evaluate: repetitions must be >= 1");
  require(!cfg.cells.empty(), ErrorKind::InvalidArgument, "evaluate: no ablation cells");
  auto say = [&progress](const std::string &msg) {
    if (progress) progress(msg);
  };
  const dataset::Dataset data = raw.normalized ? dataset::denormalize(raw) : raw;
  require(data.subjects().size() >= 2, ErrorKind::InvalidArgument,
          "evaluate: leave-one-subject-out needs at least 2 subjects");

  const bool any_hc = std::any_of(cfg.cells.begin(), cfg.cells.end(), [](const Cell &c) { return c.handcrafted; });
  std::vector<PreparedFold> folds;
  for (auto &f : dataset::loso_splits(data)) {
    PreparedFold p;
    p.test_subject = f.test_subject;
    const auto stats = dataset::fit_channel_stats(f.train);
    p.train = dataset::normalize(f.train, stats);
    p.test = dataset::normalize(f.test, stats);
    if (any_hc) {
      say("fold " + p.test_subject + ": building references and features");
      const auto fx = dtwfeat::fit_feature_extractor(p.train, cfg.features.bins, cfg.features.theta,
                                                     cfg.features.dba_iterations);
      p.train_features = feature_matrix(fx, p.train);
      p.test_features = feature_matrix(fx, p.test);
    }
    folds.push_back(std::move(p));
  }

  std::vector<srnn::Framework> frameworks;
  for (const auto &c : cfg.cells) {
    if (std::find(frameworks.begin(), frameworks.end(), c.framework) == frameworks.end()) {
      frameworks.push_back(c.framework);
    }
  }

  EvalReport report;
  report.task = cfg.task;
  report.repetitions = cfg.repetitions;
  report.metric_names = metric_names(cfg.task);
  report.cells.resize(cfg.cells.size());
  for (std::size_t c = 0; c < cfg.cells.size(); ++c) report.cells[c].method = cfg.cells[c].name();

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    std::vector<std::vector<SamplePrediction>> rep_preds(cfg.cells.size());
    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
      const auto &fold = folds[fi];
      for (const auto fw : frameworks) {
        say("repetition " + std::to_string(rep + 1) + "/" + std::to_string(cfg.repetitions) + ", fold " +
            fold.test_subject + ": training " + srnn::to_string(fw) + " ensemble");
        srnn::EnsembleConfig mcfg = cfg.model;
        mcfg.framework = fw;
        srnn::TrainConfig tcfg = cfg.train;
        tcfg.seed = mix_seed(rep_seed, 100 + fi);
        const auto model = srnn::train(fold.train, mcfg, tcfg).model;
        const MatrixXd z_train = latent_matrix(model, fold.train);
        const MatrixXd z_test = latent_matrix(model, fold.test);
        for (std::size_t c = 0; c < cfg.cells.size(); ++c) {
          if (cfg.cells[c].framework != fw) continue;
          const bool hc = cfg.cells[c].handcrafted;
          const auto clf = fit_classifier(z_train, fold.train_features, fold.train, cfg, hc,
                                          mix_seed(rep_seed, 200 + fi));
          const auto preds = predict(clf, z_test, fold.test_features);
          std::vector<SamplePrediction> fold_preds;
          for (std::size_t k = 0; k < preds.size(); ++k) {
            const auto &s = fold.test.samples[k];
            fold_preds.push_back({rep, s.subject_id, s.trial_file, cfg.codec.pain_class(s.pain_level),
                                  s.protective, preds[k]});
          }
          report.cells[c].folds.push_back(
              {rep, fold.test_subject, evaluate_predictions(fold_preds, cfg.task, cfg.codec)});
          rep_preds[c].insert(rep_preds[c].end(), fold_preds.begin(), fold_preds.end());
        }
      }
    }
    for (std::size_t c = 0; c < cfg.cells.size(); ++c) {
      report.cells[c].per_repetition.push_back(evaluate_predictions(rep_preds[c], cfg.task, cfg.codec));
      auto &all = report.cells[c].predictions;
      all.insert(all.end(), rep_preds[c].begin(), rep_preds[c].end());
    }
  }

  for (auto &cell : report.cells) {
    for (std::size_t m = 0; m < report.metric_names.size(); ++m) {
      std::vector<double> vals;
      for (const auto &r : cell.per_repetition) vals.push_back(r[m]);
      cell.summaries.push_back(metrics::summarize(vals));
    }
  }
  return report;
}

std::string report_to_csv(const EvalReport &r) {
  std::ostringstream os;
  os << "method,repetitions";
  for (const auto &m : r.metric_names) os << ',' << m << ',' << m << "_ci95";
  os << '\n';
  for (const auto &c : r.cells) {
    os << c.method << ',' << r.repetitions;
    for (const auto &s : c.summaries) os << ',' << text::format_double(s.mean) << ',' << text::format_double(s.half_width);
    os << '\n';
  }
  return os.str();
}

serialize::Json report_to_json(const EvalReport &r) {
  serialize::Json j{{"task", to_string(r.task)},
                    {"repetitions", r.repetitions},
                    {"metrics", r.metric_names},
                    {"methods", serialize::Json::array()}};
  for (const auto &c : r.cells) {
    serialize::Json cell{{"method", c.method}, {"summary", serialize::Json::object()},
                         {"per_repetition", c.per_repetition}, {"folds", serialize::Json::array()}};
    for (std::size_t m = 0; m < r.metric_names.size(); ++m) {
      const auto &s = c.summaries[m];
      cell["summary"][r.metric_names[m]] = {
          {"mean", s.mean}, {"ci95", s.half_width}, {"single_repetition", s.single_repetition}};
    }
    for (const auto &f : c.folds) {
      cell["folds"].push_back({{"repetition", f.repetition}, {"test_subject", f.test_subject}, {"values", f.values}});
    }
    j["methods"].push_back(std::move(cell));
  }
  return j;
}

}  // namespace painrnn::pipeline
