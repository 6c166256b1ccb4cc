#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ovtrack/geometry.hpp"
#include "ovtrack/types.hpp"

namespace ovtrack {

enum class TrackState { Active, Coasting, Dead };

// An identity over time. Observations hold only the frames where a detection
// was actually matched (coasted frames leave no observation); the per-frame
// lists run parallel to observations.
struct Track {
  int64_t track_id = 0;
  std::vector<std::pair<int, Detection3D>> observations;  // (frame_index, det)
  TrackState state = TrackState::Active;
  int missed_count = 0;
  std::vector<double> per_frame_confidence;
  std::vector<FrameLabel> per_frame_label;

  const Detection3D& last_detection() const { return observations.back().second; }
  int last_frame() const { return observations.back().first; }
};

// Pairwise geometric relation between a track's predicted position and a
// candidate detection. Seven scalars total (size_ratio contributes three).
struct EdgeFeature {
  double bev_distance = 0.0;        // metres, <= d_max by construction
  double iou_3d = 0.0;              // [0, 1]
  Eigen::Vector3d size_ratio{0, 0, 0};  // log(w/w'), log(l/l'), log(h/h')
  double yaw_diff = 0.0;            // radians in [0, pi]
  double velocity_consistency = 0.0;  // metres

  Eigen::Matrix<double, 7, 1> to_vector() const;
};

struct Edge {
  int64_t track_id = 0;
  int detection_index = 0;  // index into the frame's detection vector
  EdgeFeature feature;
};

// Affinity in [0, 1]; higher means more likely the same object.
//
// Geometric: iou_3d when positive, else a distance/velocity falloff capped at
// `geometric_cap` so near-touching pairs never outrank solidly overlapping
// ones. LearnedLogistic: sigmoid over standardized edge features.
struct AffinityModel {
  enum class Kind { Geometric, LearnedLogistic };
  Kind kind = Kind::Geometric;
  double d_max = 3.0;
  double geometric_cap = 0.3;
  Eigen::Matrix<double, 7, 1> weights = Eigen::Matrix<double, 7, 1>::Zero();
  double bias = 0.0;
  Eigen::Matrix<double, 7, 1> feature_mean = Eigen::Matrix<double, 7, 1>::Zero();
  Eigen::Matrix<double, 7, 1> feature_std = Eigen::Matrix<double, 7, 1>::Ones();
  double holdout_accuracy = 0.0;  // filled by train_affinity
};

double affinity(const AffinityModel& model, const EdgeFeature& edge);

// Per-detection features feeding the confidence head.
struct ConfidenceFeatures {
  double nn_distance = 0.0;      // BEV distance to nearest other detection, capped
  double track_age = 0.0;        // observations before this frame
  double speed = 0.0;            // |velocity|
  double volume = 0.0;           // box volume
  double matched_affinity = 0.0; // affinity of the matched edge, 0 for births

  static constexpr double kNnDistanceCap = 20.0;
  Eigen::Matrix<double, 5, 1> to_vector() const;
};

// Monotone-squashing regressor mapping detection features to [0, 1]. When
// disabled the tracker reports the detection's source score (1.0 when absent)
// instead, so predicting from a disabled model is an error.
struct ConfidenceModel {
  bool enabled = false;
  Eigen::Matrix<double, 5, 1> weights = Eigen::Matrix<double, 5, 1>::Zero();
  double bias = 0.0;
  Eigen::Matrix<double, 5, 1> feature_mean = Eigen::Matrix<double, 5, 1>::Zero();
  Eigen::Matrix<double, 5, 1> feature_std = Eigen::Matrix<double, 5, 1>::Ones();
  double training_mse = 0.0;
  double baseline_mse = 0.0;  // constant-mean predictor on the same data
};

double predict_confidence(const ConfidenceModel& model, const ConfidenceFeatures& f);

// Constant-velocity prediction: last observed box translated by velocity*dt
// in x/y; size, yaw, z unchanged. Requires >= 1 observation and dt > 0.
Box3D predict_track_position(const Track& track, double dt);

// One edge per (non-dead track, detection) pair whose predicted-position BEV
// distance is <= d_max; features are computed against the prediction.
std::vector<Edge> build_association_graph(const std::vector<Track>& tracks,
                                          const std::vector<Detection3D>& detections,
                                          double dt, double d_max);

// Fits a logistic model on labeled edges. Deterministic given input order.
// Every 5th example (index % 5 == 0) is held out for the reported accuracy;
// throws if the training partition lacks a positive or a negative example.
AffinityModel train_affinity(const std::vector<std::pair<EdgeFeature, bool>>& examples,
                             double d_max, int iterations = 500,
                             double learning_rate = 0.5);

// Fits the confidence regressor by full-batch gradient descent on MSE.
// Deterministic given input order; throws on an empty example set.
ConfidenceModel train_confidence(
    const std::vector<std::pair<ConfidenceFeatures, double>>& examples,
    int iterations = 4000, double learning_rate = 2.0);

// Builds labeled training edges from two consecutive detection frames whose
// detections have been matched against ground-truth track ids (base classes
// only). Previous-frame detections act as single-observation tracks. Edges
// where neither endpoint carries a ground-truth id are skipped: their
// same-object status is unknowable, not negative.
std::vector<std::pair<EdgeFeature, bool>> make_labeled_edges(
    const std::vector<Detection3D>& prev_dets, const std::vector<Detection3D>& cur_dets,
    const std::vector<std::pair<Box3D, int64_t>>& gt_prev,
    const std::vector<std::pair<Box3D, int64_t>>& gt_cur, double iou_min, double dt,
    double d_max);

struct TrackerConfig {
  double dt = 0.5;           // seconds between frames
  double d_max = 3.0;        // edge truncation distance, metres
  double affinity_min = 0.05;  // edges below this are forbidden in matching
  int max_age = 3;           // consecutive misses before death
};

// Output for one frame: each matched or newly born detection with the track
// it now belongs to and its predicted confidence.
struct FrameEmit {
  int64_t track_id = 0;
  int detection_index = 0;
  double confidence = 1.0;
  ConfidenceFeatures features;
};

// Class-agnostic tracking state for a single scene. Frames must be stepped in
// strictly increasing frame_index order. Detections' class_name/source_score
// are never read: geometry alone drives association.
class Tracker {
 public:
  Tracker(TrackerConfig config, AffinityModel affinity_model,
          ConfidenceModel confidence_model);

  std::vector<FrameEmit> step(int frame_index, const std::vector<Detection3D>& detections);

  const std::vector<Track>& tracks() const { return tracks_; }
  std::vector<Track>& tracks() { return tracks_; }

 private:
  TrackerConfig config_;
  AffinityModel affinity_model_;
  ConfidenceModel confidence_model_;
  std::vector<Track> tracks_;
  int64_t next_track_id_ = 1;
  int last_frame_index_ = -1;
};

}  // namespace ovtrack
