#pragma once

#include <string>

#include "ovtrack/tracker.hpp"

namespace ovtrack {

// Trained model bundle persisted as a versioned JSON document.
struct Models {
  AffinityModel affinity;
  ConfidenceModel confidence;
  int64_t seed = 0;
  std::string split;
  int64_t n_affinity_examples = 0;
  int64_t n_confidence_examples = 0;
};

void write_models(const std::string& path, const Models& models);

// Throws std::runtime_error on missing files, schema violations, or an
// unsupported version field.
Models read_models(const std::string& path);

}  // namespace ovtrack
