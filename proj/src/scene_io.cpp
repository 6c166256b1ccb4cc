#include "ovtrack/scene_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ovtrack {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

// Applies `fn` to each non-empty line, reporting failures as "path:line: why".
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

template <typename T>
T require(const json& j, const std::string& field) {
  const auto it = j.find(field);
  if (it == j.end()) throw std::runtime_error("missing field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error("field '" + field + "' has the wrong type");
  }
}

Eigen::Vector3d vec3_from(const json& j, const std::string& field) {
  const auto v = require<std::vector<double>>(j, field);
  if (v.size() != 3) throw std::runtime_error("field '" + field + "' must have 3 entries");
  return {v[0], v[1], v[2]};
}

Eigen::Vector2d vec2_from(const json& j, const std::string& field) {
  const auto v = require<std::vector<double>>(j, field);
  if (v.size() != 2) throw std::runtime_error("field '" + field + "' must have 2 entries");
  return {v[0], v[1]};
}

}  // namespace

json box3d_to_json(const Box3D& box) {
  return json{{"center", {box.center.x(), box.center.y(), box.center.z()}},
              {"size", {box.size.x(), box.size.y(), box.size.z()}},
              {"yaw", box.yaw},
              {"velocity", {box.velocity.x(), box.velocity.y()}}};
}

Box3D box3d_from_json(const json& j) {
  return Box3D(vec3_from(j, "center"), vec3_from(j, "size"), require<double>(j, "yaw"),
               vec2_from(j, "velocity"));
}

json box2d_to_json(const Box2D& box) { return json{box.x1, box.y1, box.x2, box.y2}; }

Box2D box2d_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw std::runtime_error("2D box must be a [x1, y1, x2, y2] array");
  }
  return Box2D(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
               j[3].get<double>());
}

json calib_to_json(const CameraCalib& calib) {
  std::vector<double> rotation(9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rotation[r * 3 + c] = calib.rotation(r, c);
  }
  return json{{"fx", calib.fx},
              {"fy", calib.fy},
              {"cx", calib.cx},
              {"cy", calib.cy},
              {"rotation", rotation},
              {"translation", {calib.translation.x(), calib.translation.y(),
                               calib.translation.z()}},
              {"width", calib.image_width},
              {"height", calib.image_height}};
}

CameraCalib calib_from_json(const json& j) {
  const auto rot = require<std::vector<double>>(j, "rotation");
  if (rot.size() != 9) throw std::runtime_error("field 'rotation' must have 9 entries");
  Eigen::Matrix3d rotation;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rotation(r, c) = rot[r * 3 + c];
  }
  return CameraCalib(require<double>(j, "fx"), require<double>(j, "fy"),
                     require<double>(j, "cx"), require<double>(j, "cy"), rotation,
                     vec3_from(j, "translation"), require<int>(j, "width"),
                     require<int>(j, "height"));
}

void write_scene(const std::string& dir, const SimScene& scene) {
  fs::create_directories(dir);

  {
    std::ofstream out = open_out(dir + "/meta.json");
    out << json{{"scene_id", scene.scene_id}, {"n_frames", scene.n_frames}}.dump(2)
        << "\n";
  }
  {
    json cams = json::object();
    for (const auto& [camera_id, calib] : scene.calibs) {
      cams[camera_id] = calib_to_json(calib);
    }
    std::ofstream out = open_out(dir + "/calibs.json");
    out << json{{"cameras", cams}}.dump(2) << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/gt.jsonl");
    for (size_t f = 0; f < scene.gt_frames.size(); ++f) {
      for (const GtBox& gt : scene.gt_frames[f]) {
        out << json{{"frame", static_cast<int>(f)},
                    {"track_id", gt.track_id},
                    {"class", gt.class_name},
                    {"box", box3d_to_json(gt.box)}}
                   .dump()
            << "\n";
      }
    }
  }
  {
    std::ofstream out = open_out(dir + "/dets3d.jsonl");
    for (size_t f = 0; f < scene.det3d_frames.size(); ++f) {
      for (const Detection3D& det : scene.det3d_frames[f]) {
        json rec{{"frame", static_cast<int>(f)},
                 {"detection_id", det.detection_id},
                 {"box", box3d_to_json(det.box)}};
        if (det.class_name) rec["class"] = *det.class_name;
        if (det.source_score) rec["source_score"] = *det.source_score;
        out << rec.dump() << "\n";
      }
    }
  }
  {
    std::ofstream out = open_out(dir + "/dets2d.jsonl");
    for (size_t f = 0; f < scene.det2d_frames.size(); ++f) {
      for (const Detection2D& det : scene.det2d_frames[f]) {
        out << json{{"frame", static_cast<int>(f)},
                    {"camera", det.camera_id},
                    {"box", box2d_to_json(det.box)},
                    {"class", det.class_name},
                    {"score", det.score}}
                   .dump()
            << "\n";
      }
    }
  }
}

SimScene read_scene(const std::string& dir) {
  SimScene scene;
  {
    std::ifstream in = open_in(dir + "/meta.json");
    json meta;
    try {
      meta = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error(dir + "/meta.json: " + e.what());
    }
    scene.scene_id = require<std::string>(meta, "scene_id");
    scene.n_frames = require<int>(meta, "n_frames");
    if (scene.n_frames < 1) throw std::runtime_error(dir + "/meta.json: n_frames must be >= 1");
  }
  {
    std::ifstream in = open_in(dir + "/calibs.json");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error(dir + "/calibs.json: " + e.what());
    }
    const auto it = doc.find("cameras");
    if (it == doc.end() || !it->is_object()) {
      throw std::runtime_error(dir + "/calibs.json: missing 'cameras' object");
    }
    for (const auto& [camera_id, calib] : it->items()) {
      try {
        scene.calibs.emplace(camera_id, calib_from_json(calib));
      } catch (const std::exception& e) {
        throw std::runtime_error(dir + "/calibs.json: camera '" + camera_id + "': " +
                                 e.what());
      }
    }
  }

  scene.gt_frames.resize(scene.n_frames);
  scene.det3d_frames.resize(scene.n_frames);
  scene.det2d_frames.resize(scene.n_frames);

  auto frame_of = [&](const json& j) {
    const int f = require<int>(j, "frame");
    if (f < 0 || f >= scene.n_frames) {
      throw std::runtime_error("frame " + std::to_string(f) + " outside [0, " +
                               std::to_string(scene.n_frames) + ")");
    }
    return f;
  };

  for_each_record(dir + "/gt.jsonl", [&](const json& j) {
    GtBox gt;
    gt.track_id = require<int64_t>(j, "track_id");
    gt.class_name = require<std::string>(j, "class");
    gt.box = box3d_from_json(j.at("box"));
    scene.gt_frames[frame_of(j)].push_back(std::move(gt));
  });
  for_each_record(dir + "/dets3d.jsonl", [&](const json& j) {
    Detection3D det;
    const int f = frame_of(j);
    det.frame_index = f;
    det.detection_id = require<int>(j, "detection_id");
    det.box = box3d_from_json(j.at("box"));
    if (j.contains("class")) det.class_name = require<std::string>(j, "class");
    if (j.contains("source_score")) {
      const double s = require<double>(j, "source_score");
      if (!(s >= 0.0 && s <= 1.0)) throw std::runtime_error("source_score outside [0, 1]");
      det.source_score = s;
    }
    scene.det3d_frames[f].push_back(std::move(det));
  });
  for_each_record(dir + "/dets2d.jsonl", [&](const json& j) {
    Detection2D det;
    const int f = frame_of(j);
    det.frame_index = f;
    det.camera_id = require<std::string>(j, "camera");
    det.box = box2d_from_json(j.at("box"));
    det.class_name = require<std::string>(j, "class");
    det.score = require<double>(j, "score");
    if (!(det.score >= 0.0 && det.score <= 1.0)) {
      throw std::runtime_error("score outside [0, 1]");
    }
    if (scene.calibs.find(det.camera_id) == scene.calibs.end()) {
      throw std::runtime_error("no calibration for camera '" + det.camera_id + "'");
    }
    scene.det2d_frames[f].push_back(std::move(det));
  });
  return scene;
}

std::vector<std::string> list_scene_dirs(const std::string& root) {
  if (!fs::is_directory(root)) {
    throw std::runtime_error("'" + root + "' is not a directory");
  }
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() &&
        entry.path().filename().string().rfind("scene_", 0) == 0) {
      dirs.push_back(entry.path().string());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

void write_track_records(const std::string& path, const std::vector<TrackRecord>& records) {
  std::ofstream out = open_out(path);
  for (const TrackRecord& rec : records) {
    out << json{{"scene", rec.scene_id},
                {"frame", rec.frame_index},
                {"track_id", rec.track_id},
                {"box", box3d_to_json(rec.box)},
                {"class", rec.class_name},
                {"confidence", rec.confidence}}
               .dump()
        << "\n";
  }
}

std::vector<TrackRecord> read_track_records(const std::string& path) {
  std::vector<TrackRecord> records;
  for_each_record(path, [&](const json& j) {
    TrackRecord rec;
    rec.scene_id = require<std::string>(j, "scene");
    rec.frame_index = require<int>(j, "frame");
    rec.track_id = require<int64_t>(j, "track_id");
    rec.box = box3d_from_json(j.at("box"));
    rec.class_name = require<std::string>(j, "class");
    rec.confidence = require<double>(j, "confidence");
    if (!(rec.confidence >= 0.0 && rec.confidence <= 1.0)) {
      throw std::runtime_error("confidence outside [0, 1]");
    }
    records.push_back(std::move(rec));
  });
  return records;
}

SimScene import_nuscenes_scene(const std::string& dataset_root,
                               const std::string& scene_token) {
  throw std::runtime_error("nuScenes import is not implemented (requested scene '" +
                           scene_token + "' under '" + dataset_root + "')");
}

}  // namespace ovtrack
