// SPDX-License-Identifier: Apache-2.0
#include "painrnn/serialize.hpp"

#include "painrnn/text.hpp"

namespace painrnn::serialize {

namespace {

constexpr int kFormatVersion = 1;

template <class F>
auto guarded(const std::string &what, F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::Format, what + ": " + e.what());
  }
}

Json cell_to_json(const srnn::GruCellParams &p) {
  return Json{{"Wz", matrix_to_json(p.Wz)}, {"Wr", matrix_to_json(p.Wr)}, {"Wh", matrix_to_json(p.Wh)},
              {"Uz", matrix_to_json(p.Uz)}, {"Ur", matrix_to_json(p.Ur)}, {"Uh", matrix_to_json(p.Uh)},
              {"bz", vector_to_json(p.bz)}, {"br", vector_to_json(p.br)}, {"bh", vector_to_json(p.bh)}};
}

srnn::GruCellParams cell_from_json(const Json &j) {
  srnn::GruCellParams p;
  p.Wz = matrix_from_json(j.at("Wz"), "Wz");
  p.Wr = matrix_from_json(j.at("Wr"), "Wr");
  p.Wh = matrix_from_json(j.at("Wh"), "Wh");
  p.Uz = matrix_from_json(j.at("Uz"), "Uz");
  p.Ur = matrix_from_json(j.at("Ur"), "Ur");
  p.Uh = matrix_from_json(j.at("Uh"), "Uh");
  p.bz = vector_from_json(j.at("bz"), "bz");
  p.br = vector_from_json(j.at("br"), "br");
  p.bh = vector_from_json(j.at("bh"), "bh");
  srnn::check_shapes(p);
  return p;
}

// One character per step: 1 = recent, 2 = skip, 3 = both.
Json wiring_to_json(const srnn::SparseWiring &w) {
  std::string codes;
  codes.reserve(w.steps.size());
  for (const auto &s : w.steps) codes.push_back(static_cast<char>('0' + (s.recent ? 1 : 0) + (s.skip ? 2 : 0)));
  return Json{{"skip_length", w.skip_length}, {"steps", codes}};
}

srnn::SparseWiring wiring_from_json(const Json &j) {
  srnn::SparseWiring w;
  w.skip_length = j.at("skip_length").get<int>();
  for (char c : j.at("steps").get<std::string>()) {
    require(c >= '1' && c <= '3', ErrorKind::Format, "wiring: invalid step code");
    const int v = c - '0';
    w.steps.push_back({(v & 1) != 0, (v & 2) != 0});
  }
  return w;
}

Json bn_to_json(const srnn::BatchNorm &b) {
  return Json{{"gamma", vector_to_json(b.gamma)},
              {"beta", vector_to_json(b.beta)},
              {"running_mean", vector_to_json(b.running_mean)},
              {"running_var", vector_to_json(b.running_var)},
              {"momentum", b.momentum},
              {"epsilon", b.epsilon}};
}

srnn::BatchNorm bn_from_json(const Json &j) {
  srnn::BatchNorm b;
  b.gamma = vector_from_json(j.at("gamma"), "gamma");
  b.beta = vector_from_json(j.at("beta"), "beta");
  b.running_mean = vector_from_json(j.at("running_mean"), "running_mean");
  b.running_var = vector_from_json(j.at("running_var"), "running_var");
  b.momentum = j.at("momentum").get<double>();
  b.epsilon = j.at("epsilon").get<double>();
  return b;
}

}  // namespace

Json matrix_to_json(const MatrixXd &m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const Json &j, const std::string &what) {
  return guarded(what, [&] {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    require(rows >= 0 && cols >= 0 && static_cast<Index>(data.size()) == rows * cols, ErrorKind::Format,
            what + ": data length does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    return MatrixXd(Eigen::Map<const MatrixXd>(data.data(), rows, cols));
  });
}

Json vector_to_json(const VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd vector_from_json(const Json &j, const std::string &what) {
  return guarded(what, [&] {
    const auto data = j.get<std::vector<double>>();
    return VectorXd(Eigen::Map<const VectorXd>(data.data(), static_cast<Index>(data.size())));
  });
}

Json to_json(const dataset::ChannelStats &s) {
  Json j{{"mean", Json::array()}, {"stddev", Json::array()}};
  for (std::size_t k = 0; k < s.mean.size(); ++k) {
    j["mean"].push_back(vector_to_json(s.mean[k]));
    j["stddev"].push_back(vector_to_json(s.stddev[k]));
  }
  return j;
}

dataset::ChannelStats channel_stats_from_json(const Json &j) {
  return guarded("channel stats", [&] {
    dataset::ChannelStats s;
    require(j.at("mean").size() == s.mean.size() && j.at("stddev").size() == s.stddev.size(),
            ErrorKind::Format, "channel stats: expected three streams");
    for (std::size_t k = 0; k < s.mean.size(); ++k) {
      s.mean[k] = vector_from_json(j.at("mean").at(k), "mean");
      s.stddev[k] = vector_from_json(j.at("stddev").at(k), "stddev");
    }
    return s;
  });
}

Json to_json(const srnn::EnsembleModel &m) {
  const auto &c = m.config;
  Json j;
  j["config"] = Json{{"input_dims", c.input_dims}, {"hidden", c.hidden},
                     {"skip", c.skip},             {"l1_weight", c.l1_weight},
                     {"framework", srnn::to_string(c.framework)}, {"max_length", c.max_length}};
  j["autoencoders"] = Json::array();
  for (const auto &ae : m.aes) {
    j["autoencoders"].push_back(Json{
        {"encoder", cell_to_json(ae.encoder)},
        {"decoder",
         Json{{"cell", cell_to_json(ae.decoder.cell)},
              {"embed", matrix_to_json(ae.decoder.embed)},
              {"readout", matrix_to_json(ae.decoder.readout)},
              {"readout_bias", vector_to_json(ae.decoder.readout_bias)}}},
        {"shared_proj", matrix_to_json(ae.shared_proj)},
        {"init_map", matrix_to_json(ae.init_map)},
        {"init_bias", vector_to_json(ae.init_bias)},
        {"encoder_wiring", wiring_to_json(ae.encoder_wiring)},
        {"decoder_wiring", wiring_to_json(ae.decoder_wiring)}});
  }
  return j;
}

srnn::EnsembleModel ensemble_from_json(const Json &j) {
  return guarded("ensemble checkpoint", [&] {
    srnn::EnsembleModel m;
    const auto &c = j.at("config");
    m.config.input_dims = c.at("input_dims").get<std::vector<Index>>();
    m.config.hidden = c.at("hidden").get<std::vector<Index>>();
    m.config.skip = c.at("skip").get<std::vector<int>>();
    m.config.l1_weight = c.at("l1_weight").get<double>();
    m.config.framework = srnn::parse_framework(c.at("framework").get<std::string>());
    m.config.max_length = c.at("max_length").get<Index>();
    m.config.validate();
    const auto &aes = j.at("autoencoders");
    require(aes.size() == m.config.size(), ErrorKind::Format,
            "ensemble checkpoint: autoencoder count does not match config");
    for (const auto &a : aes) {
      srnn::AutoencoderParams p;
      p.encoder = cell_from_json(a.at("encoder"));
      const auto &d = a.at("decoder");
      p.decoder.cell = cell_from_json(d.at("cell"));
      p.decoder.embed = matrix_from_json(d.at("embed"), "embed");
      p.decoder.readout = matrix_from_json(d.at("readout"), "readout");
      p.decoder.readout_bias = vector_from_json(d.at("readout_bias"), "readout_bias");
      srnn::check_shapes(p.decoder);
      p.shared_proj = matrix_from_json(a.at("shared_proj"), "shared_proj");
      p.init_map = matrix_from_json(a.at("init_map"), "init_map");
      p.init_bias = vector_from_json(a.at("init_bias"), "init_bias");
      p.encoder_wiring = wiring_from_json(a.at("encoder_wiring"));
      p.decoder_wiring = wiring_from_json(a.at("decoder_wiring"));
      m.aes.push_back(std::move(p));
    }
    return m;
  });
}

Json to_json(const srnn::FusionHead &h) {
  return Json{{"W1", matrix_to_json(h.W1)}, {"b1", vector_to_json(h.b1)}, {"bn1", bn_to_json(h.bn1)},
              {"W2", matrix_to_json(h.W2)}, {"b2", vector_to_json(h.b2)}, {"bn2", bn_to_json(h.bn2)},
              {"dropout", h.dropout}};
}

srnn::FusionHead head_from_json(const Json &j) {
  return guarded("fusion head", [&] {
    srnn::FusionHead h;
    h.W1 = matrix_from_json(j.at("W1"), "W1");
    h.b1 = vector_from_json(j.at("b1"), "b1");
    h.bn1 = bn_from_json(j.at("bn1"));
    h.W2 = matrix_from_json(j.at("W2"), "W2");
    h.b2 = vector_from_json(j.at("b2"), "b2");
    h.bn2 = bn_from_json(j.at("bn2"));
    h.dropout = j.at("dropout").get<double>();
    require(h.b1.size() == h.W1.rows() && h.W2.cols() == h.W1.rows() && h.b2.size() == h.W2.rows(),
            ErrorKind::Format, "fusion head: inconsistent shapes");
    return h;
  });
}

Json to_json(const glocal::GlocalModel &m) {
  const auto &c = m.config;
  Json j{{"U", matrix_to_json(m.U)},
         {"V", matrix_to_json(m.V)},
         {"W", matrix_to_json(m.W)},
         {"global_laplacian", matrix_to_json(m.global_laplacian)},
         {"local_laplacians", Json::array()},
         {"group_of", m.group_of},
         {"objective_trace", m.objective_trace},
         {"config", Json{{"rank", c.rank},
                         {"groups", c.groups},
                         {"fit_weight", c.fit_weight},
                         {"manifold_weight", c.manifold_weight},
                         {"ridge", c.ridge},
                         {"max_rounds", c.max_rounds},
                         {"tolerance", c.tolerance},
                         {"kmeans_iterations", c.kmeans_iterations},
                         {"seed", c.seed}}}};
  for (const auto &L : m.local_laplacians) j["local_laplacians"].push_back(matrix_to_json(L));
  return j;
}

glocal::GlocalModel glocal_from_json(const Json &j) {
  return guarded("glocal model", [&] {
    glocal::GlocalModel m;
    m.U = matrix_from_json(j.at("U"), "U");
    m.V = matrix_from_json(j.at("V"), "V");
    m.W = matrix_from_json(j.at("W"), "W");
    m.global_laplacian = matrix_from_json(j.at("global_laplacian"), "global_laplacian");
    for (const auto &L : j.at("local_laplacians")) m.local_laplacians.push_back(matrix_from_json(L, "local"));
    m.group_of = j.at("group_of").get<std::vector<int>>();
    m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    const auto &c = j.at("config");
    m.config.rank = c.at("rank").get<Index>();
    m.config.groups = c.at("groups").get<Index>();
    m.config.fit_weight = c.at("fit_weight").get<double>();
    m.config.manifold_weight = c.at("manifold_weight").get<double>();
    m.config.ridge = c.at("ridge").get<double>();
    m.config.max_rounds = c.at("max_rounds").get<int>();
    m.config.tolerance = c.at("tolerance").get<double>();
    m.config.kmeans_iterations = c.at("kmeans_iterations").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    require(m.U.cols() == m.W.rows(), ErrorKind::Format, "glocal model: U and W disagree on rank");
    return m;
  });
}

Json to_json(const glocal::SoftmaxHead &h) {
  return Json{{"W", matrix_to_json(h.W)}, {"b", vector_to_json(h.b)}};
}

glocal::SoftmaxHead softmax_from_json(const Json &j) {
  return guarded("softmax head", [&] {
    glocal::SoftmaxHead h{matrix_from_json(j.at("W"), "W"), vector_from_json(j.at("b"), "b")};
    require(h.W.rows() == 2 && h.b.size() == 2, ErrorKind::Format, "softmax head: expected two classes");
    return h;
  });
}

Json to_json(const dtwfeat::FeatureExtractor &fx) {
  Json j{{"references", Json::array()},
         {"range", {fx.range.lo, fx.range.hi}},
         {"bins", fx.bins},
         {"theta", fx.theta}};
  for (const auto &r : fx.references) j["references"].push_back(matrix_to_json(r));
  return j;
}

dtwfeat::FeatureExtractor feature_extractor_from_json(const Json &j) {
  return guarded("feature extractor", [&] {
    dtwfeat::FeatureExtractor fx;
    const auto &refs = j.at("references");
    require(refs.size() == fx.references.size(), ErrorKind::Format,
            "feature extractor: expected one reference per stream");
    for (std::size_t k = 0; k < fx.references.size(); ++k) fx.references[k] = matrix_from_json(refs.at(k), "reference");
    fx.range.lo = j.at("range").at(0).get<double>();
    fx.range.hi = j.at("range").at(1).get<double>();
    fx.bins = j.at("bins").get<int>();
    fx.theta = j.at("theta").get<double>();
    return fx;
  });
}

Json document(const std::string &format, Json body) {
  return Json{{"format", format}, {"version", kFormatVersion}, {"body", std::move(body)}};
}

Json read_document(const std::filesystem::path &path, const std::string &format) {
  const std::string content = text::read_file(path);
  return guarded(path.string(), [&] {
    Json j = Json::parse(content);
    require(j.at("format").get<std::string>() == format, ErrorKind::Format,
            path.string() + ": expected a '" + format + "' document, found '" +
                j.at("format").get<std::string>() + "'");
    require(j.at("version").get<int>() == kFormatVersion, ErrorKind::Format,
            path.string() + ": unsupported format version");
    return j.at("body");
  });
}

void write_json(const std::filesystem::path &path, const Json &j) { text::write_file(path, j.dump() + "\n"); }

}  // namespace painrnn::serialize
