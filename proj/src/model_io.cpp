#include "ovtrack/model_io.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace ovtrack {

namespace {

using nlohmann::json;

constexpr int kModelsVersion = 1;

template <int N>
json vector_to_json(const Eigen::Matrix<double, N, 1>& v) {
  std::vector<double> out(N);
  for (int i = 0; i < N; ++i) out[i] = v[i];
  return json(out);
}

template <int N>
Eigen::Matrix<double, N, 1> vector_from_json(const json& j, const std::string& field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_array() || it->size() != N) {
    throw std::runtime_error("models file: field '" + field + "' must be an array of " +
                             std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = (*it)[i].get<double>();
  return v;
}

template <typename T>
T require(const json& j, const std::string& field) {
  const auto it = j.find(field);
  if (it == j.end()) throw std::runtime_error("models file: missing field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error("models file: field '" + field + "' has the wrong type");
  }
}

}  // namespace

void write_models(const std::string& path, const Models& models) {
  json affinity{
      {"kind", models.affinity.kind == AffinityModel::Kind::Geometric ? "geometric"
                                                                      : "learned_logistic"},
      {"d_max", models.affinity.d_max},
      {"geometric_cap", models.affinity.geometric_cap},
      {"weights", vector_to_json<7>(models.affinity.weights)},
      {"bias", models.affinity.bias},
      {"feature_mean", vector_to_json<7>(models.affinity.feature_mean)},
      {"feature_std", vector_to_json<7>(models.affinity.feature_std)},
      {"holdout_accuracy", models.affinity.holdout_accuracy}};
  json confidence{{"enabled", models.confidence.enabled},
                  {"weights", vector_to_json<5>(models.confidence.weights)},
                  {"bias", models.confidence.bias},
                  {"feature_mean", vector_to_json<5>(models.confidence.feature_mean)},
                  {"feature_std", vector_to_json<5>(models.confidence.feature_std)},
                  {"training_mse", models.confidence.training_mse},
                  {"baseline_mse", models.confidence.baseline_mse}};
  json doc{{"version", kModelsVersion},
           {"affinity", affinity},
           {"confidence", confidence},
           {"training", json{{"seed", models.seed},
                             {"split", models.split},
                             {"n_affinity_examples", models.n_affinity_examples},
                             {"n_confidence_examples", models.n_confidence_examples}}}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
}

Models read_models(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open models file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("models file '" + path + "': " + std::string(e.what()));
  }
  const int version = require<int>(doc, "version");
  if (version != kModelsVersion) {
    throw std::runtime_error("models file '" + path + "': unsupported version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kModelsVersion) + ")");
  }

  Models models;
  const json& a = doc.at("affinity");
  const std::string kind = require<std::string>(a, "kind");
  if (kind == "geometric") {
    models.affinity.kind = AffinityModel::Kind::Geometric;
  } else if (kind == "learned_logistic") {
    models.affinity.kind = AffinityModel::Kind::LearnedLogistic;
  } else {
    throw std::runtime_error("models file: unknown affinity kind '" + kind + "'");
  }
  models.affinity.d_max = require<double>(a, "d_max");
  models.affinity.geometric_cap = require<double>(a, "geometric_cap");
  models.affinity.weights = vector_from_json<7>(a, "weights");
  models.affinity.bias = require<double>(a, "bias");
  models.affinity.feature_mean = vector_from_json<7>(a, "feature_mean");
  models.affinity.feature_std = vector_from_json<7>(a, "feature_std");
  models.affinity.holdout_accuracy = require<double>(a, "holdout_accuracy");

  const json& c = doc.at("confidence");
  models.confidence.enabled = require<bool>(c, "enabled");
  models.confidence.weights = vector_from_json<5>(c, "weights");
  models.confidence.bias = require<double>(c, "bias");
  models.confidence.feature_mean = vector_from_json<5>(c, "feature_mean");
  models.confidence.feature_std = vector_from_json<5>(c, "feature_std");
  models.confidence.training_mse = require<double>(c, "training_mse");
  models.confidence.baseline_mse = require<double>(c, "baseline_mse");

  if (doc.contains("training")) {
    const json& t = doc.at("training");
    models.seed = t.value("seed", static_cast<int64_t>(0));
    models.split = t.value("split", std::string());
    models.n_affinity_examples = t.value("n_affinity_examples", static_cast<int64_t>(0));
    models.n_confidence_examples = t.value("n_confidence_examples", static_cast<int64_t>(0));
  }
  return models;
}

}  // namespace ovtrack
