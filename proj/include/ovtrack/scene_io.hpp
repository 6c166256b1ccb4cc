#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovtrack/geometry.hpp"
#include "ovtrack/metrics.hpp"
#include "ovtrack/simulator.hpp"
#include "ovtrack/types.hpp"

namespace ovtrack {

// JSON codecs. Doubles are emitted with shortest round-trip formatting, so
// write -> read -> write is byte-stable and value-lossless.
nlohmann::json box3d_to_json(const Box3D& box);
Box3D box3d_from_json(const nlohmann::json& j);
nlohmann::json box2d_to_json(const Box2D& box);
Box2D box2d_from_json(const nlohmann::json& j);
nlohmann::json calib_to_json(const CameraCalib& calib);
CameraCalib calib_from_json(const nlohmann::json& j);

// One final output row: a track's box at one frame with its selected class.
struct TrackRecord {
  std::string scene_id;
  int frame_index = 0;
  int64_t track_id = 0;
  Box3D box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(), 0.0};
  std::string class_name;
  double confidence = 1.0;
};

// Scene directory layout: meta.json, calibs.json, gt.jsonl, dets3d.jsonl,
// dets2d.jsonl (one record per line). Readers attach "file:line:" context to
// every record-level failure.
void write_scene(const std::string& dir, const SimScene& scene);
SimScene read_scene(const std::string& dir);

// Scene subdirectories ("scene_*") of a root directory, sorted by name.
std::vector<std::string> list_scene_dirs(const std::string& root);

void write_track_records(const std::string& path, const std::vector<TrackRecord>& records);
std::vector<TrackRecord> read_track_records(const std::string& path);

// Reserved import adapter for nuScenes-format datasets. The intended contract
// mirrors read_scene: given a dataset root and a scene token, return the
// scene's ground-truth boxes, 3D proposals, per-camera 2D detections, and
// camera calibrations in this library's types. Real-data ingestion is out of
// scope for now, so this always throws std::runtime_error.
SimScene import_nuscenes_scene(const std::string& dataset_root,
                               const std::string& scene_token);

}  // namespace ovtrack
