#include "ovtrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "ovtrack/assignment.hpp"

namespace ovtrack {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Standardization guards against zero-variance features.
template <int N>
Eigen::Matrix<double, N, 1> standardize(const Eigen::Matrix<double, N, 1>& x,
                                        const Eigen::Matrix<double, N, 1>& mean,
                                        const Eigen::Matrix<double, N, 1>& std) {
  Eigen::Matrix<double, N, 1> z;
  for (int i = 0; i < N; ++i) z[i] = (x[i] - mean[i]) / (std[i] > 1e-12 ? std[i] : 1.0);
  return z;
}

template <int N>
void fit_standardization(const std::vector<Eigen::Matrix<double, N, 1>>& xs,
                         Eigen::Matrix<double, N, 1>& mean,
                         Eigen::Matrix<double, N, 1>& std) {
  mean.setZero();
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Eigen::Matrix<double, N, 1> var = Eigen::Matrix<double, N, 1>::Zero();
  for (const auto& x : xs) var += (x - mean).cwiseProduct(x - mean);
  var /= static_cast<double>(xs.size());
  std = var.cwiseSqrt();
}

}  // namespace

Eigen::Matrix<double, 7, 1> EdgeFeature::to_vector() const {
  Eigen::Matrix<double, 7, 1> v;
  v << bev_distance, iou_3d, size_ratio.x(), size_ratio.y(), size_ratio.z(), yaw_diff,
      velocity_consistency;
  return v;
}

Eigen::Matrix<double, 5, 1> ConfidenceFeatures::to_vector() const {
  Eigen::Matrix<double, 5, 1> v;
  v << nn_distance, track_age, speed, volume, matched_affinity;
  return v;
}

double affinity(const AffinityModel& model, const EdgeFeature& edge) {
  if (model.kind == AffinityModel::Kind::Geometric) {
    if (edge.iou_3d > 0.0) return edge.iou_3d;
    return model.geometric_cap * std::exp(-edge.bev_distance / model.d_max) *
           std::exp(-edge.velocity_consistency / model.d_max);
  }
  const auto z = standardize<7>(edge.to_vector(), model.feature_mean, model.feature_std);
  return sigmoid(model.weights.dot(z) + model.bias);
}

double predict_confidence(const ConfidenceModel& model, const ConfidenceFeatures& f) {
  if (!model.enabled) {
    throw std::invalid_argument("predict_confidence requires an enabled model");
  }
  const auto z = standardize<5>(f.to_vector(), model.feature_mean, model.feature_std);
  return sigmoid(model.weights.dot(z) + model.bias);
}

Box3D predict_track_position(const Track& track, double dt) {
  if (track.observations.empty()) {
    throw std::invalid_argument("cannot predict from an empty track");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const Box3D& last = track.last_detection().box;
  Eigen::Vector3d center = last.center;
  center.head<2>() += last.velocity * dt;
  return Box3D(center, last.size, last.yaw, last.velocity);
}

namespace {

EdgeFeature make_edge_feature(const Box3D& predicted, const Box3D& last_observed,
                              const Detection3D& det, double dt) {
  EdgeFeature f;
  f.bev_distance = bev_center_distance(predicted, det.box);
  f.iou_3d = iou_3d(predicted, det.box);
  f.size_ratio = Eigen::Vector3d(std::log(predicted.w() / det.box.w()),
                                 std::log(predicted.l() / det.box.l()),
                                 std::log(predicted.h() / det.box.h()));
  f.yaw_diff = std::abs(normalize_angle(predicted.yaw - det.box.yaw));
  // Back-predict the detection by its own velocity and compare against the
  // track's last observed position: consistent motion gives a small value.
  const Eigen::Vector2d back = det.box.center.head<2>() - det.box.velocity * dt;
  f.velocity_consistency = (back - last_observed.center.head<2>()).norm();
  return f;
}

}  // namespace

std::vector<Edge> build_association_graph(const std::vector<Track>& tracks,
                                          const std::vector<Detection3D>& detections,
                                          double dt, double d_max) {
  if (!(d_max > 0.0)) throw std::invalid_argument("d_max must be positive");
  std::vector<Edge> edges;
  for (const Track& track : tracks) {
    if (track.state == TrackState::Dead || track.observations.empty()) continue;
    const Box3D predicted = predict_track_position(track, dt);
    const Box3D& last = track.last_detection().box;
    for (size_t j = 0; j < detections.size(); ++j) {
      if (bev_center_distance(predicted, detections[j].box) > d_max) continue;
      edges.push_back(Edge{track.track_id, static_cast<int>(j),
                           make_edge_feature(predicted, last, detections[j], dt)});
    }
  }
  return edges;
}

AffinityModel train_affinity(const std::vector<std::pair<EdgeFeature, bool>>& examples,
                             double d_max, int iterations, double learning_rate) {
  std::vector<Eigen::Matrix<double, 7, 1>> train_x, hold_x;
  std::vector<double> train_y, hold_y;
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& [f, label] = examples[i];
    if (i % 5 == 0 && examples.size() >= 5) {
      hold_x.push_back(f.to_vector());
      hold_y.push_back(label ? 1.0 : 0.0);
    } else {
      train_x.push_back(f.to_vector());
      train_y.push_back(label ? 1.0 : 0.0);
    }
  }
  const int n_pos = static_cast<int>(std::count(train_y.begin(), train_y.end(), 1.0));
  if (train_x.empty() || n_pos == 0 || n_pos == static_cast<int>(train_y.size())) {
    throw std::invalid_argument(
        "affinity training needs at least one positive and one negative example");
  }

  AffinityModel model;
  model.kind = AffinityModel::Kind::LearnedLogistic;
  model.d_max = d_max;
  fit_standardization<7>(train_x, model.feature_mean, model.feature_std);
  for (auto& x : train_x) x = standardize<7>(x, model.feature_mean, model.feature_std);

  const double n = static_cast<double>(train_x.size());
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 7, 1> grad_w = Eigen::Matrix<double, 7, 1>::Zero();
    double grad_b = 0.0;
    for (size_t i = 0; i < train_x.size(); ++i) {
      const double p = sigmoid(model.weights.dot(train_x[i]) + model.bias);
      const double err = p - train_y[i];
      grad_w += err * train_x[i];
      grad_b += err;
    }
    model.weights -= learning_rate / n * grad_w;
    model.bias -= learning_rate / n * grad_b;
  }

  if (!hold_x.empty()) {
    int correct = 0;
    for (size_t i = 0; i < hold_x.size(); ++i) {
      const auto z = standardize<7>(hold_x[i], model.feature_mean, model.feature_std);
      const double p = sigmoid(model.weights.dot(z) + model.bias);
      if ((p >= 0.5) == (hold_y[i] == 1.0)) ++correct;
    }
    model.holdout_accuracy = static_cast<double>(correct) / hold_x.size();
  }
  return model;
}

ConfidenceModel train_confidence(
    const std::vector<std::pair<ConfidenceFeatures, double>>& examples, int iterations,
    double learning_rate) {
  if (examples.empty()) {
    throw std::invalid_argument("confidence training needs at least one example");
  }
  std::vector<Eigen::Matrix<double, 5, 1>> xs;
  std::vector<double> ys;
  for (const auto& [f, target] : examples) {
    if (!(target >= 0.0 && target <= 1.0)) {
      throw std::invalid_argument("confidence targets must lie in [0, 1]");
    }
    xs.push_back(f.to_vector());
    ys.push_back(target);
  }

  ConfidenceModel model;
  model.enabled = true;
  fit_standardization<5>(xs, model.feature_mean, model.feature_std);
  for (auto& x : xs) x = standardize<5>(x, model.feature_mean, model.feature_std);

  const double n = static_cast<double>(xs.size());
  double mean_y = 0.0;
  for (double y : ys) mean_y += y;
  mean_y /= n;
  model.baseline_mse = 0.0;
  for (double y : ys) model.baseline_mse += (y - mean_y) * (y - mean_y);
  model.baseline_mse /= n;

  // Start the bias at the logit of the target mean: the first iterate already
  // matches the constant-mean baseline, and descent only improves from there.
  const double clamped = std::clamp(mean_y, 1e-6, 1.0 - 1e-6);
  model.bias = std::log(clamped / (1.0 - clamped));

  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 5, 1> grad_w = Eigen::Matrix<double, 5, 1>::Zero();
    double grad_b = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const double p = sigmoid(model.weights.dot(xs[i]) + model.bias);
      const double g = 2.0 * (p - ys[i]) * p * (1.0 - p);
      grad_w += g * xs[i];
      grad_b += g;
    }
    model.weights -= learning_rate / n * grad_w;
    model.bias -= learning_rate / n * grad_b;
  }

  model.training_mse = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double p = sigmoid(model.weights.dot(xs[i]) + model.bias);
    model.training_mse += (p - ys[i]) * (p - ys[i]);
  }
  model.training_mse /= n;
  return model;
}

std::vector<std::pair<EdgeFeature, bool>> make_labeled_edges(
    const std::vector<Detection3D>& prev_dets, const std::vector<Detection3D>& cur_dets,
    const std::vector<std::pair<Box3D, int64_t>>& gt_prev,
    const std::vector<std::pair<Box3D, int64_t>>& gt_cur, double iou_min, double dt,
    double d_max) {
  const auto prev_ids = assign_gt_track_ids(gt_prev, prev_dets, iou_min);
  const auto cur_ids = assign_gt_track_ids(gt_cur, cur_dets, iou_min);

  // Previous detections become single-observation pseudo-tracks, indexed by
  // their position so ids map back to assignments.
  std::vector<Track> pseudo;
  pseudo.reserve(prev_dets.size());
  for (size_t i = 0; i < prev_dets.size(); ++i) {
    Track t;
    t.track_id = static_cast<int64_t>(i);
    t.observations.emplace_back(prev_dets[i].frame_index, prev_dets[i]);
    pseudo.push_back(std::move(t));
  }

  std::vector<std::pair<EdgeFeature, bool>> labeled;
  for (const Edge& e : build_association_graph(pseudo, cur_dets, dt, d_max)) {
    const auto pit = prev_ids.find(static_cast<int>(e.track_id));
    const auto cit = cur_ids.find(e.detection_index);
    if (pit == prev_ids.end() && cit == cur_ids.end()) continue;
    const bool same =
        pit != prev_ids.end() && cit != cur_ids.end() && pit->second == cit->second;
    labeled.emplace_back(e.feature, same);
  }
  return labeled;
}

Tracker::Tracker(TrackerConfig config, AffinityModel affinity_model,
                 ConfidenceModel confidence_model)
    : config_(config),
      affinity_model_(std::move(affinity_model)),
      confidence_model_(std::move(confidence_model)) {
  if (!(config_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(config_.d_max > 0.0)) throw std::invalid_argument("d_max must be positive");
  if (config_.max_age < 0) throw std::invalid_argument("max_age must be non-negative");
  if (!(config_.affinity_min >= 0.0 && config_.affinity_min <= 1.0)) {
    throw std::invalid_argument("affinity_min must lie in [0, 1]");
  }
}

std::vector<FrameEmit> Tracker::step(int frame_index,
                                     const std::vector<Detection3D>& detections) {
  if (frame_index <= last_frame_index_) {
    throw std::invalid_argument("frames must arrive in increasing frame_index order");
  }
  last_frame_index_ = frame_index;

  // Alive tracks participate in matching; the cost matrix is indexed by their
  // position in this list.
  std::vector<size_t> alive;
  for (size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].state != TrackState::Dead) alive.push_back(i);
  }

  std::vector<Track> alive_view;
  alive_view.reserve(alive.size());
  for (size_t i : alive) alive_view.push_back(tracks_[i]);
  const auto edges = build_association_graph(alive_view, detections, config_.dt,
                                             config_.d_max);

  std::map<int64_t, int> row_of_track;
  for (size_t r = 0; r < alive.size(); ++r) row_of_track[tracks_[alive[r]].track_id] = static_cast<int>(r);

  CostMatrix costs;
  costs.rows = static_cast<int>(alive.size());
  costs.cols = static_cast<int>(detections.size());
  costs.values.assign(static_cast<size_t>(costs.rows) * costs.cols, CostMatrix::kForbidden);
  std::vector<double> edge_affinity(static_cast<size_t>(costs.rows) * costs.cols, 0.0);
  for (const Edge& e : edges) {
    const int r = row_of_track.at(e.track_id);
    const double a = affinity(affinity_model_, e.feature);
    if (a < config_.affinity_min) continue;
    costs.values[static_cast<size_t>(r) * costs.cols + e.detection_index] = 1.0 - a;
    edge_affinity[static_cast<size_t>(r) * costs.cols + e.detection_index] = a;
  }

  const Assignment assignment = hungarian(costs);

  std::vector<bool> det_matched(detections.size(), false);
  std::vector<bool> track_matched(alive.size(), false);
  std::vector<FrameEmit> emits;

  auto confidence_features = [&](const Detection3D& det, double age,
                                 double matched_aff) {
    ConfidenceFeatures f;
    double nn = ConfidenceFeatures::kNnDistanceCap;
    for (const Detection3D& other : detections) {
      if (other.detection_id == det.detection_id) continue;
      nn = std::min(nn, bev_center_distance(det.box, other.box));
    }
    f.nn_distance = nn;
    f.track_age = age;
    f.speed = det.box.velocity.norm();
    f.volume = det.box.volume();
    f.matched_affinity = matched_aff;
    return f;
  };

  for (const auto& [r, c] : assignment.pairs) {
    Track& track = tracks_[alive[r]];
    const Detection3D& det = detections[c];
    const double age = static_cast<double>(track.observations.size());
    const double aff = edge_affinity[static_cast<size_t>(r) * costs.cols + c];
    track.observations.emplace_back(frame_index, det);
    track.state = TrackState::Active;
    track.missed_count = 0;
    const ConfidenceFeatures f = confidence_features(det, age, aff);
    const double conf = confidence_model_.enabled
                            ? predict_confidence(confidence_model_, f)
                            : det.source_score.value_or(1.0);
    track.per_frame_confidence.push_back(conf);
    track.per_frame_label.emplace_back();
    emits.push_back(FrameEmit{track.track_id, c, conf, f});
    det_matched[c] = true;
    track_matched[r] = true;
  }

  for (size_t r = 0; r < alive.size(); ++r) {
    if (track_matched[r]) continue;
    Track& track = tracks_[alive[r]];
    track.missed_count += 1;
    track.state = track.missed_count > config_.max_age ? TrackState::Dead
                                                       : TrackState::Coasting;
  }

  for (size_t c = 0; c < detections.size(); ++c) {
    if (det_matched[c]) continue;
    Track track;
    track.track_id = next_track_id_++;
    track.observations.emplace_back(frame_index, detections[c]);
    const ConfidenceFeatures f = confidence_features(detections[c], 0.0, 0.0);
    const double conf = confidence_model_.enabled
                            ? predict_confidence(confidence_model_, f)
                            : detections[c].source_score.value_or(1.0);
    track.per_frame_confidence.push_back(conf);
    track.per_frame_label.emplace_back();
    emits.push_back(FrameEmit{track.track_id, static_cast<int>(c), conf, f});
    tracks_.push_back(std::move(track));
  }

  std::sort(emits.begin(), emits.end(),
            [](const FrameEmit& a, const FrameEmit& b) { return a.track_id < b.track_id; });
  return emits;
}

}  // namespace ovtrack
