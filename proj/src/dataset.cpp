// SPDX-License-Identifier: Apache-2.0
#include "painrnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "painrnn/text.hpp"

namespace painrnn::dataset {

namespace fs = std::filesystem;

std::string to_string(TrialKind kind) {
  return kind == TrialKind::Normal ? "normal" : "difficult";
}

TrialKind parse_trial_kind(const std::string &text) {
  if (text == "normal") return TrialKind::Normal;
  if (text == "difficult") return TrialKind::Difficult;
  fail(ErrorKind::Format, "unknown trial kind '" + text + "'");
}

const Series &MultistreamSample::stream(std::size_t i) const {
  switch (i) {
    case 0: return angles;
    case 1: return energies;
    case 2: return emg;
  }
  fail(ErrorKind::InvalidArgument, "stream index out of range");
}

Series &MultistreamSample::stream(std::size_t i) {
  return const_cast<Series &>(std::as_const(*this).stream(i));
}

void validate(const MultistreamSample &s) {
  const std::string where = "sample " + s.subject_id + "/" + s.trial_file;
  const Index c = s.angles.rows();
  require(c >= 2, ErrorKind::Shape, where + ": needs at least 2 time steps");
  for (std::size_t i = 0; i < 3; ++i) {
    const Series &m = s.stream(i);
    require(m.rows() == c, ErrorKind::Shape, where + ": streams differ in length");
    require(m.cols() == kStreamChannels[i], ErrorKind::Shape,
            where + ": stream " + std::to_string(i + 1) + " has " + std::to_string(m.cols()) +
                " channels, expected " + std::to_string(kStreamChannels[i]));
    require(m.allFinite(), ErrorKind::NonFinite, where + ": non-finite value");
  }
  require(s.pain_level >= 0 && s.pain_level <= kMaxPainLevel, ErrorKind::Format,
          where + ": pain level out of range [0,10]");
}

std::vector<std::string> Dataset::subjects() const {
  std::set<std::string> ids;
  for (const auto &s : samples) ids.insert(s.subject_id);
  return {ids.begin(), ids.end()};
}

ChannelStats fit_channel_stats(const Dataset &ds) {
  require(!ds.samples.empty(), ErrorKind::InvalidArgument, "cannot fit stats on empty dataset");
  ChannelStats st;
  for (std::size_t i = 0; i < 3; ++i) {
    const Index d = kStreamChannels[i];
    VectorXd sum = VectorXd::Zero(d);
    double n = 0;
    for (const auto &s : ds.samples) {
      sum += s.stream(i).colwise().sum().transpose();
      n += static_cast<double>(s.length());
    }
    const VectorXd mean = sum / n;
    VectorXd sq = VectorXd::Zero(d);
    for (const auto &s : ds.samples) {
      sq += (s.stream(i).rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    }
    st.mean[i] = mean;
    st.stddev[i] = (sq / n).array().sqrt();
  }
  return st;
}

Dataset normalize(const Dataset &ds, const ChannelStats &stats) {
  require(!stats.empty(), ErrorKind::InvalidArgument, "normalization stats are empty");
  Dataset out = ds;
  out.channel_stats = stats;
  out.normalized = true;
  for (auto &s : out.samples) {
    for (std::size_t i = 0; i < 3; ++i) {
      Series &m = s.stream(i);
      for (Index c = 0; c < m.cols(); ++c) {
        const double sd = stats.stddev[i](c);
        if (sd > 0.0) {
          m.col(c) = (m.col(c).array() - stats.mean[i](c)) / sd;
        } else {
          m.col(c).setZero();
        }
      }
    }
  }
  return out;
}

Dataset denormalize(const Dataset &ds) {
  require(ds.normalized, ErrorKind::State, "dataset is not normalized");
  Dataset out = ds;
  out.normalized = false;
  const ChannelStats &st = ds.channel_stats;
  for (auto &s : out.samples) {
    for (std::size_t i = 0; i < 3; ++i) {
      Series &m = s.stream(i);
      for (Index c = 0; c < m.cols(); ++c) {
        m.col(c) = m.col(c).array() * st.stddev[i](c) + st.mean[i](c);
      }
    }
  }
  return out;
}

namespace {

std::vector<std::string> stream_header() {
  std::vector<std::string> h{"t"};
  for (Index c = 1; c <= kAngleChannels; ++c) h.push_back("a" + std::to_string(c));
  for (Index c = 1; c <= kEnergyChannels; ++c) h.push_back("e" + std::to_string(c));
  for (Index c = 1; c <= kEmgChannels; ++c) h.push_back("m" + std::to_string(c));
  return h;
}

void check_stream_header(const std::vector<std::string> &cols, const std::string &file) {
  require(!cols.empty() && cols[0] == "t", ErrorKind::Format,
          file + ":1: header must start with 't'");
  std::array<Index, 3> counts{0, 0, 0};
  for (std::size_t i = 1; i < cols.size(); ++i) {
    const char p = cols[i].empty() ? '?' : cols[i][0];
    if (p == 'a') ++counts[0];
    else if (p == 'e') ++counts[1];
    else if (p == 'm') ++counts[2];
    else fail(ErrorKind::Format, file + ":1: unexpected column '" + cols[i] + "'");
  }
  static constexpr std::array<const char *, 3> names{"angle", "energy", "sEMG"};
  for (std::size_t i = 0; i < 3; ++i) {
    require(counts[i] == kStreamChannels[i], ErrorKind::Format,
            file + ":1: column-count mismatch: expected " + std::to_string(kStreamChannels[i]) +
                " " + names[i] + " columns, found " + std::to_string(counts[i]));
  }
  require(cols == stream_header(), ErrorKind::Format,
          file + ":1: columns must be ordered t,a1..a13,e1..e13,m1..m4");
}

Series read_block(const std::vector<std::vector<double>> &rows, Index first, Index count) {
  Series m(static_cast<Index>(rows.size()), count);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < count; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(first + c)];
  }
  return m;
}

void read_trial_file(const fs::path &path, MultistreamSample &s) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "missing file: " + path.string());
  const std::string file = path.string();
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, file + ": empty file");
  check_stream_header(text::split(text::trim(line), ','), file);
  const std::size_t width = static_cast<std::size_t>(1 + kAngleChannels + kEnergyChannels + kEmgChannels);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++lineno;
    line = text::trim(line);
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    const std::string where = file + ":" + std::to_string(lineno);
    require(cells.size() == width, ErrorKind::Format,
            where + ": column-count mismatch: expected " + std::to_string(width) + " values, found " +
                std::to_string(cells.size()));
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      row[c] = text::parse_double(cells[c], where);
      require(std::isfinite(row[c]), ErrorKind::NonFinite, where + ": non-finite value");
    }
    require(row[0] > last_t, ErrorKind::Format, where + ": time must be strictly ascending");
    last_t = row[0];
    rows.push_back(std::move(row));
  }
  require(rows.size() >= 2, ErrorKind::Format, file + ": needs at least 2 rows");
  s.angles = read_block(rows, 1, kAngleChannels);
  s.energies = read_block(rows, 1 + kAngleChannels, kEnergyChannels);
  s.emg = read_block(rows, 1 + kAngleChannels + kEnergyChannels, kEmgChannels);
}

}  // namespace

Dataset load_dataset(const fs::path &root, const LoadOptions &opts) {
  const fs::path index = root / "labels.csv";
  std::ifstream in(index);
  require(in.good(), ErrorKind::Io, "missing file: " + index.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, index.string() + ": empty file");
  const std::vector<std::string> expected{"subject_id", "trial_file", "trial_kind", "pain_level",
                                          "protective"};
  require(text::split(text::trim(line), ',') == expected, ErrorKind::Format,
          index.string() + ":1: header must be subject_id,trial_file,trial_kind,pain_level,protective");

  Dataset ds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = index.string() + ":" + std::to_string(lineno);
    const auto cells = text::split(line, ',');
    require(cells.size() == 5, ErrorKind::Format, where + ": expected 5 columns");
    MultistreamSample s;
    s.subject_id = cells[0];
    s.trial_file = cells[1];
    try {
      s.trial_kind = parse_trial_kind(cells[2]);
    } catch (const Error &e) {
      fail(ErrorKind::Format, where + ": " + e.what());
    }
    const double pain = text::parse_double(cells[3], where);
    require(pain == std::floor(pain) && pain >= 0 && pain <= kMaxPainLevel, ErrorKind::Format,
            where + ": label out of range: pain_level must be an integer in [0,10]");
    s.pain_level = static_cast<int>(pain);
    require(cells[4] == "0" || cells[4] == "1", ErrorKind::Format,
            where + ": label out of range: protective must be 0 or 1");
    s.protective = cells[4] == "1";
    if (opts.trial_kind && *opts.trial_kind != s.trial_kind) continue;
    read_trial_file(root / s.trial_file, s);
    validate(s);
    ds.samples.push_back(std::move(s));
  }
  if (opts.normalize && !ds.samples.empty()) return normalize(ds, fit_channel_stats(ds));
  return ds;
}

void save_dataset(const Dataset &ds, const fs::path &root) {
  fs::create_directories(root);
  std::ofstream labels(root / "labels.csv");
  require(labels.good(), ErrorKind::Io, "cannot write " + (root / "labels.csv").string());
  labels << "subject_id,trial_file,trial_kind,pain_level,protective\n";
  const auto header = stream_header();
  for (const auto &s : ds.samples) {
    labels << s.subject_id << ',' << s.trial_file << ',' << to_string(s.trial_kind) << ','
           << s.pain_level << ',' << (s.protective ? 1 : 0) << '\n';
    std::ofstream out(root / s.trial_file);
    require(out.good(), ErrorKind::Io, "cannot write " + (root / s.trial_file).string());
    out << text::join(header, ',') << '\n';
    for (Index t = 0; t < s.length(); ++t) {
      out << t;
      for (std::size_t i = 0; i < 3; ++i) {
        for (Index c = 0; c < s.stream(i).cols(); ++c) out << ',' << text::format_double(s.stream(i)(t, c));
      }
      out << '\n';
    }
  }
}

Dataset filter_trial_kind(const Dataset &ds, std::optional<TrialKind> kind) {
  if (!kind) return ds;
  Dataset out;
  out.channel_stats = ds.channel_stats;
  out.normalized = ds.normalized;
  for (const auto &s : ds.samples) {
    if (s.trial_kind == *kind) out.samples.push_back(s);
  }
  return out;
}

Dataset synthesize_dataset(const SynthConfig &cfg) {
  require(cfg.n_subjects >= 2, ErrorKind::InvalidArgument, "synth: n_subjects must be >= 2");
  require(cfg.trials_per_subject >= 1, ErrorKind::InvalidArgument,
          "synth: trials_per_subject must be >= 1");
  require(cfg.length_min >= 10 && cfg.length_max >= cfg.length_min, ErrorKind::InvalidArgument,
          "synth: length range must satisfy 10 <= length_min <= length_max");
  require(cfg.noise_scale >= 0 && std::isfinite(cfg.noise_scale), ErrorKind::InvalidArgument,
          "synth: noise_scale must be finite and >= 0");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> length_dist(cfg.length_min, cfg.length_max);

  Dataset ds;
  for (int subj = 0; subj < cfg.n_subjects; ++subj) {
    const bool healthy = subj % 2 == 0;
    const double subj_gain = 0.9 + 0.2 * unit(rng);
    const double subj_phase = -0.2 + 0.4 * unit(rng);
    const double subj_tempo = 0.9 + 0.2 * unit(rng);
    char sid[16];
    std::snprintf(sid, sizeof sid, "S%02d", subj + 1);
    for (int trial = 0; trial < cfg.trials_per_subject; ++trial) {
      MultistreamSample s;
      s.subject_id = sid;
      char fname[32];
      std::snprintf(fname, sizeof fname, "s%02d_t%02d.csv", subj + 1, trial + 1);
      s.trial_file = fname;
      s.trial_kind = (trial / 2) % 2 == 0 ? TrialKind::Normal : TrialKind::Difficult;
      s.protective = !healthy && trial % 2 == 1;
      const double severity = unit(rng);
      if (healthy) {
        s.pain_level = 0;
      } else if (s.protective) {
        s.pain_level = std::min(kMaxPainLevel, 5 + static_cast<int>(6.0 * severity));
      } else {
        s.pain_level = 1 + static_cast<int>(3.0 * severity);
      }
      const bool difficult = s.trial_kind == TrialKind::Difficult;
      const double rom = s.protective ? 1.0 - 0.5 * (0.5 + 0.5 * severity) : 1.0;
      const double freq = subj_tempo * (difficult ? 1.25 : 1.0);
      const double emg_base =
          (s.protective ? 0.5 + 0.3 * severity : 0.2 * subj_gain) + (difficult ? 0.1 : 0.0);

      const Index len = length_dist(rng);
      s.angles.resize(len, kAngleChannels);
      s.energies.resize(len, kEnergyChannels);
      s.emg.resize(len, kEmgChannels);
      for (Index t = 0; t < len; ++t) {
        const double tau = static_cast<double>(t) / static_cast<double>(len - 1);
        const double w = two_pi * freq * tau;
        for (Index c = 0; c < kAngleChannels; ++c) {
          const double amp = 10.0 + 2.0 * static_cast<double>(c);
          const double ph = 0.4 * static_cast<double>(c) + subj_phase;
          const double clean = 5.0 * static_cast<double>(c) +
                               subj_gain * rom * amp * (std::sin(w + ph) + 0.3 * std::sin(2.0 * w + 2.0 * ph));
          s.angles(t, c) = clean + cfg.noise_scale * amp * gauss(rng);
        }
        for (Index c = 0; c < kEnergyChannels; ++c) {
          const double scale = 1.0 + 0.1 * static_cast<double>(c);
          const double ph = 0.4 * static_cast<double>(c) + subj_phase;
          const double clean = subj_gain * rom * rom * scale *
                               (1.0 + 0.8 * std::cos(2.0 * w + 2.0 * ph) + 0.2 * std::sin(w));
          s.energies(t, c) = clean + cfg.noise_scale * scale * gauss(rng);
        }
        for (Index c = 0; c < kEmgChannels; ++c) {
          const double m = static_cast<double>(c);
          const double clean = emg_base + 0.1 * (std::sin(w + m) + 0.5 * std::sin(3.0 * w + 0.5 * m));
          s.emg(t, c) = clean + cfg.noise_scale * 0.3 * gauss(rng);
        }
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

std::vector<Fold> loso_splits(const Dataset &ds) {
  const auto subjects = ds.subjects();
  require(subjects.size() >= 2, ErrorKind::InvalidArgument,
          "leave-one-subject-out needs at least 2 subjects");
  std::vector<Fold> folds;
  folds.reserve(subjects.size());
  for (const auto &subj : subjects) {
    Fold f;
    f.test_subject = subj;
    f.train.channel_stats = f.test.channel_stats = ds.channel_stats;
    f.train.normalized = f.test.normalized = ds.normalized;
    for (const auto &s : ds.samples) {
      (s.subject_id == subj ? f.test : f.train).samples.push_back(s);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

MultistreamSample truncate(const MultistreamSample &s, Index length) {
  require(length >= 1 && length <= s.length(), ErrorKind::InvalidArgument, "truncate: bad length");
  MultistreamSample out = s;
  out.angles = s.angles.topRows(length);
  out.energies = s.energies.topRows(length);
  out.emg = s.emg.topRows(length);
  return out;
}

std::vector<MiniBatch> make_minibatches(const Dataset &ds, std::size_t batch_size,
                                        std::uint64_t seed) {
  require(batch_size >= 1, ErrorKind::InvalidArgument, "batch_size must be >= 1");
  require(!ds.samples.empty(), ErrorKind::InvalidArgument, "cannot batch an empty dataset");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<MiniBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    MiniBatch b;
    b.length = std::numeric_limits<Index>::max();
    for (std::size_t k = start; k < end; ++k) b.length = std::min(b.length, ds.samples[order[k]].length());
    for (std::size_t k = start; k < end; ++k) {
      b.samples.push_back(truncate(ds.samples[order[k]], b.length));
      b.source_index.push_back(order[k]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace painrnn::dataset
