// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "painrnn/dataset.hpp"
#include "painrnn/dtwfeat/features.hpp"
#include "painrnn/glocal.hpp"
#include "painrnn/srnn/ensemble.hpp"
#include "painrnn/srnn/head.hpp"

namespace painrnn::serialize {

using Json = nlohmann::json;

// Every writer emits doubles in shortest round-trip form, so a save/load
// cycle reproduces the model bit for bit.

Json matrix_to_json(const MatrixXd &m);
MatrixXd matrix_from_json(const Json &j, const std::string &what);
Json vector_to_json(const VectorXd &v);
VectorXd vector_from_json(const Json &j, const std::string &what);

Json to_json(const dataset::ChannelStats &s);
dataset::ChannelStats channel_stats_from_json(const Json &j);

Json to_json(const srnn::EnsembleModel &m);
srnn::EnsembleModel ensemble_from_json(const Json &j);

Json to_json(const srnn::FusionHead &h);
srnn::FusionHead head_from_json(const Json &j);

Json to_json(const glocal::GlocalModel &m);
glocal::GlocalModel glocal_from_json(const Json &j);

Json to_json(const glocal::SoftmaxHead &h);
glocal::SoftmaxHead softmax_from_json(const Json &j);

Json to_json(const dtwfeat::FeatureExtractor &fx);
dtwfeat::FeatureExtractor feature_extractor_from_json(const Json &j);

/// Wraps `body` with a format tag and version; `read_document` checks both.
Json document(const std::string &format, Json body);
Json read_document(const std::filesystem::path &path, const std::string &format);
void write_json(const std::filesystem::path &path, const Json &j);

}  // namespace painrnn::serialize
