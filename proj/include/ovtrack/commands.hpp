#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ovtrack/config.hpp"
#include "ovtrack/consistency.hpp"
#include "ovtrack/metrics.hpp"
#include "ovtrack/simulator.hpp"
#include "ovtrack/tracker.hpp"

namespace ovtrack::cmd {

// Config-to-module adapters.
SimConfig sim_config_from(const Config& config);
TrackerConfig tracker_config_from(const Config& config);
ScoringParams scoring_params_from(const Config& config);

struct SimulateSummary {
  int n_scenes = 0;
  int n_frames = 0;
  int64_t gt_boxes = 0;
  int64_t det3d_count = 0;
  int64_t det2d_count = 0;
};

// Writes scene_NNN directories plus config_resolved.json under out_dir.
SimulateSummary simulate(const LoadedConfig& config, const std::string& out_dir,
                         int jobs = 1);

struct TrainSummary {
  int64_t n_affinity_examples = 0;
  int64_t n_confidence_examples = 0;
  double holdout_accuracy = 0.0;
  double training_mse = 0.0;
  double baseline_mse = 0.0;
};

// Trains affinity and confidence models from the scenes' base-class ground
// truth (base set chosen by config.split) and writes a versioned model file.
TrainSummary train(const LoadedConfig& config, const std::string& scenes_dir,
                   const std::string& out_models);

struct TrackSummary {
  int n_scenes = 0;
  int64_t n_tracks = 0;
  int64_t n_dropped_all_unknown = 0;
  int64_t n_records = 0;
};

// Runs tracking + open-vocabulary labeling + track scoring over every scene
// under scenes_dir and writes one JSONL record per (track, observed frame).
// Tracks whose every frame stayed unlabeled are dropped from the output.
TrackSummary track(const LoadedConfig& config, const std::string& scenes_dir,
                   const std::optional<std::string>& models_path,
                   const std::string& out_file, int jobs = 1);

// Evaluates a track file against the scenes' ground truth; writes
// metrics.json and metrics.txt under out_dir and returns the report.
MetricsReport evaluate(const LoadedConfig& config, const std::string& scenes_dir,
                       const std::string& tracks_file, const std::string& out_dir);

struct PipelineSummary {
  SimulateSummary sim;
  TrainSummary trained;
  TrackSummary tracked;
  MetricsReport report;
};

// simulate -> train -> track -> evaluate under one output root, one seed.
PipelineSummary pipeline(const LoadedConfig& config, const std::string& out_root,
                         int jobs = 1);

}  // namespace ovtrack::cmd
