#include "ovtrack/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ovtrack/model_io.hpp"
#include "ovtrack/ovlabel.hpp"
#include "ovtrack/scene_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ovtrack::cmd {
namespace {

// Runs fn(0), .., fn(n - 1), spread over up to `jobs` threads. Each index
// must touch disjoint state; the first captured exception is rethrown.
void run_indexed(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int n_threads = std::min(jobs, n);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n_threads));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

AffinityModel geometric_affinity(double d_max) {
  AffinityModel model;
  model.kind = AffinityModel::Kind::Geometric;
  model.d_max = d_max;
  return model;
}

// Resolves the association model and confidence head for tracking. A learned
// affinity requires a model file; the geometric fallback works without one.
std::pair<AffinityModel, ConfidenceModel> tracking_models(
    const Config& config, const std::optional<std::string>& models_path) {
  AffinityModel aff = geometric_affinity(config.d_max_m);
  ConfidenceModel conf;  // disabled: constant 1.0
  if (models_path) {
    const Models models = read_models(*models_path);
    if (config.affinity_kind == "learned_logistic") aff = models.affinity;
    if (config.use_confidence_model) conf = models.confidence;
  } else if (config.affinity_kind == "learned_logistic") {
    throw std::invalid_argument(
        "affinity_kind=learned_logistic requires a trained model file");
  }
  return {aff, conf};
}

// One scene end to end: per-frame open-vocabulary labeling, class-agnostic
// tracking, then per-track class selection. Tracks that never received a
// label have no class evidence and produce no records.
void track_scene(const SimScene& scene, const Config& config,
                 const AffinityModel& aff, const ConfidenceModel& conf,
                 const ScoringParams& params, std::vector<TrackRecord>& records,
                 int64_t& n_tracks, int64_t& n_dropped) {
  Tracker tracker(tracker_config_from(config), aff, conf);
  for (int f = 0; f < scene.n_frames; ++f) {
    const std::vector<Detection3D>& dets = scene.det3d_frames[f];
    std::map<std::string, std::vector<Detection2D>> by_camera;
    for (const Detection2D& d : scene.det2d_frames[f]) {
      by_camera[d.camera_id].push_back(d);
    }
    const std::vector<FrameLabel> labels =
        label_detections(dets, by_camera, scene.calibs, config.min_iou_2d);
    const std::vector<FrameEmit> emits = tracker.step(f, dets);
    std::vector<Track>& tracks = tracker.tracks();
    for (const FrameEmit& e : emits) {
      // Track ids are assigned 1, 2, .. in creation order, so id - 1 indexes
      // the tracker's track vector.
      Track& t = tracks[static_cast<size_t>(e.track_id - 1)];
      t.per_frame_label.back() = labels[static_cast<size_t>(e.detection_index)];
    }
  }
  for (const Track& t : tracker.tracks()) {
    const TrackScore score =
        score_track(t.per_frame_label, t.per_frame_confidence, params);
    if (!score.final_class) {
      ++n_dropped;
      continue;
    }
    ++n_tracks;
    for (size_t k = 0; k < t.observations.size(); ++k) {
      TrackRecord r;
      r.scene_id = scene.scene_id;
      r.frame_index = t.observations[k].first;
      r.track_id = t.track_id;
      r.box = t.observations[k].second.box;
      r.class_name = *score.final_class;
      r.confidence = t.per_frame_confidence[k];
      records.push_back(std::move(r));
    }
  }
}

json aggregate_json(double amota, double amotp) {
  return json{{"amota", amota}, {"amotp", amotp}};
}

std::string metrics_text(const MetricsReport& report) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", "class", "gt",
                "AMOTA", "AMOTP");
  out += line;
  for (const ClassMetrics& cm : report.per_class) {
    std::snprintf(line, sizeof(line), "%-12s %8d %8.4f %8.4f\n",
                  cm.class_name.c_str(), cm.gt_count, cm.amota, cm.amotp);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-12s %8s %8.4f %8.4f\n", "overall", "",
                report.overall_amota, report.overall_amotp);
  out += line;
  std::snprintf(line, sizeof(line), "%-12s %8s %8.4f %8.4f\n", "base", "",
                report.base_amota, report.base_amotp);
  out += line;
  std::snprintf(line, sizeof(line), "%-12s %8s %8.4f %8.4f\n", "novel", "",
                report.novel_amota, report.novel_amotp);
  out += line;
  for (const std::string& name : report.absent_classes) {
    out += name + ": no ground truth\n";
  }
  return out;
}

std::vector<std::string> scene_dirs_or_throw(const std::string& scenes_dir) {
  const std::vector<std::string> dirs = list_scene_dirs(scenes_dir);
  if (dirs.empty()) {
    throw std::runtime_error("no scene_* directories under " + scenes_dir);
  }
  return dirs;
}

}  // namespace

SimConfig sim_config_from(const Config& config) {
  SimConfig s;
  s.seed = static_cast<uint64_t>(config.seed);
  s.n_frames = static_cast<int>(config.n_frames);
  s.dt = config.dt_s;
  s.world_extent = config.sim_world_extent_m;
  s.min_spawn_dist = config.sim_min_spawn_dist_m;

  struct ClassRow {
    const char* name;
    int64_t Config::*count;
    std::vector<double> Config::*size;
  };
  static const ClassRow rows[] = {
      {"bicycle", &Config::sim_count_bicycle, &Config::sim_size_mean_bicycle},
      {"bus", &Config::sim_count_bus, &Config::sim_size_mean_bus},
      {"car", &Config::sim_count_car, &Config::sim_size_mean_car},
      {"motorcycle", &Config::sim_count_motorcycle, &Config::sim_size_mean_motorcycle},
      {"pedestrian", &Config::sim_count_pedestrian, &Config::sim_size_mean_pedestrian},
      {"trailer", &Config::sim_count_trailer, &Config::sim_size_mean_trailer},
      {"truck", &Config::sim_count_truck, &Config::sim_size_mean_truck},
  };
  for (const ClassRow& row : rows) {
    const std::vector<double>& size = config.*(row.size);
    if (size.size() != 3) {
      throw std::invalid_argument(std::string("sim_size_mean_") + row.name +
                                  ": expected 3 entries (w, l, h)");
    }
    ClassSpec spec;
    spec.name = row.name;
    spec.count = static_cast<int>(config.*(row.count));
    spec.size_mean = Eigen::Vector3d(size[0], size[1], size[2]);
    s.classes.push_back(std::move(spec));
  }

  s.size_sigma_frac = config.sim_size_sigma_frac;
  s.speed_min = config.sim_speed_min_mps;
  s.speed_max = config.sim_speed_max_mps;
  s.heading_jitter = config.sim_heading_jitter_rad;
  s.late_spawn_prob = config.sim_late_spawn_prob;

  s.pos_sigma = config.sim_pos_sigma_m;
  s.size_noise_frac = config.sim_size_noise_frac;
  s.yaw_sigma = config.sim_yaw_sigma_rad;
  s.vel_sigma = config.sim_vel_sigma_mps;
  s.fp_rate = config.sim_fp_rate;
  s.fn_prob = config.sim_fn_prob;
  s.score_s0 = config.sim_score_s0_m;
  s.score_noise = config.sim_score_noise;

  s.miss_prob = config.sim_miss_prob;
  s.mislabel_prob = config.sim_mislabel_prob;
  s.mislabel_classes = config.sim_mislabel_classes;
  s.mislabel_distance_extra = config.sim_mislabel_distance_extra;
  s.pixel_jitter = config.sim_pixel_jitter_px;
  s.score_mean_2d = config.sim_score_mean_2d;
  s.score_sigma_2d = config.sim_score_sigma_2d;
  s.score_floor_2d = config.score_floor_2d;

  s.n_cameras = static_cast<int>(config.sim_n_cameras);
  s.fx = config.sim_fx_px;
  s.image_width = static_cast<int>(config.sim_image_width_px);
  s.image_height = static_cast<int>(config.sim_image_height_px);
  s.camera_height = config.sim_camera_height_m;
  return s;
}

TrackerConfig tracker_config_from(const Config& config) {
  TrackerConfig t;
  t.dt = config.dt_s;
  t.d_max = config.d_max_m;
  t.affinity_min = config.affinity_min;
  t.max_age = static_cast<int>(config.max_age);
  return t;
}

ScoringParams scoring_params_from(const Config& config) {
  ScoringParams p;
  p.alpha_p = config.alpha_p;
  p.beta_ar = config.beta_ar;
  p.lambda_s = config.lambda_s;
  p.rule = combination_rule_from_string(config.consistency_rule);
  return p;
}

SimulateSummary simulate(const LoadedConfig& config, const std::string& out_dir,
                         int jobs) {
  config.values.validate();
  const SimConfig sim = sim_config_from(config.values);
  sim.validate();
  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "config_resolved.json",
                  config.resolved_json().dump(2) + "\n");

  const int n = static_cast<int>(config.values.n_scenes);
  std::vector<SimulateSummary> parts(static_cast<size_t>(n));
  run_indexed(n, jobs, [&](int i) {
    const SimScene scene = generate_scene(sim, i);
    write_scene((fs::path(out_dir) / scene.scene_id).string(), scene);
    SimulateSummary& p = parts[static_cast<size_t>(i)];
    p.n_scenes = 1;
    p.n_frames = scene.n_frames;
    for (const auto& frame : scene.gt_frames) p.gt_boxes += static_cast<int64_t>(frame.size());
    for (const auto& frame : scene.det3d_frames) p.det3d_count += static_cast<int64_t>(frame.size());
    for (const auto& frame : scene.det2d_frames) p.det2d_count += static_cast<int64_t>(frame.size());
  });

  SimulateSummary total;
  total.n_frames = sim.n_frames;
  for (const SimulateSummary& p : parts) {
    total.n_scenes += p.n_scenes;
    total.gt_boxes += p.gt_boxes;
    total.det3d_count += p.det3d_count;
    total.det2d_count += p.det2d_count;
  }
  return total;
}

TrainSummary train(const LoadedConfig& config, const std::string& scenes_dir,
                   const std::string& out_models) {
  const Config& c = config.values;
  c.validate();
  const SplitDefinition split = split_by_name(c.split);
  const std::set<std::string> base(split.base_classes.begin(),
                                   split.base_classes.end());
  const std::vector<std::string> dirs = scene_dirs_or_throw(scenes_dir);

  std::vector<SimScene> scenes;
  scenes.reserve(dirs.size());
  for (const std::string& dir : dirs) scenes.push_back(read_scene(dir));

  // Labeled association edges from consecutive frame pairs, supervised by the
  // base-class ground truth only.
  std::vector<std::pair<EdgeFeature, bool>> edges;
  for (const SimScene& scene : scenes) {
    std::vector<std::vector<std::pair<Box3D, int64_t>>> base_gt(
        static_cast<size_t>(scene.n_frames));
    for (int f = 0; f < scene.n_frames; ++f) {
      for (const GtBox& g : scene.gt_frames[f]) {
        if (base.count(g.class_name)) base_gt[f].push_back({g.box, g.track_id});
      }
    }
    for (int f = 1; f < scene.n_frames; ++f) {
      const auto frame_edges = make_labeled_edges(
          scene.det3d_frames[f - 1], scene.det3d_frames[f], base_gt[f - 1],
          base_gt[f], c.iou_min, c.dt_s, c.d_max_m);
      edges.insert(edges.end(), frame_edges.begin(), frame_edges.end());
    }
  }
  if (edges.empty()) {
    throw std::runtime_error(
        "no affinity training examples: no base-class objects were matched in " +
        scenes_dir);
  }
  const AffinityModel learned = train_affinity(edges, c.d_max_m);

  // Detection confidence targets come from the detector's source_score, on
  // detections whose claimed class is a base class. Features are collected by
  // running the tracker exactly as configured for inference.
  const AffinityModel for_tracking = c.affinity_kind == "learned_logistic"
                                         ? learned
                                         : geometric_affinity(c.d_max_m);
  std::vector<std::pair<ConfidenceFeatures, double>> conf_examples;
  for (const SimScene& scene : scenes) {
    Tracker tracker(tracker_config_from(c), for_tracking, ConfidenceModel{});
    for (int f = 0; f < scene.n_frames; ++f) {
      const std::vector<FrameEmit> emits = tracker.step(f, scene.det3d_frames[f]);
      for (const FrameEmit& e : emits) {
        const Detection3D& det =
            scene.det3d_frames[f][static_cast<size_t>(e.detection_index)];
        if (!det.source_score || !det.class_name) continue;
        if (!base.count(*det.class_name)) continue;
        conf_examples.push_back({e.features, *det.source_score});
      }
    }
  }
  if (conf_examples.empty()) {
    throw std::runtime_error(
        "no confidence training examples: no base-class detections carry a "
        "source_score in " +
        scenes_dir);
  }
  const ConfidenceModel conf = train_confidence(conf_examples);

  Models models;
  models.affinity = learned;
  models.confidence = conf;
  models.seed = c.seed;
  models.split = c.split;
  models.n_affinity_examples = static_cast<int64_t>(edges.size());
  models.n_confidence_examples = static_cast<int64_t>(conf_examples.size());
  write_models(out_models, models);

  TrainSummary summary;
  summary.n_affinity_examples = models.n_affinity_examples;
  summary.n_confidence_examples = models.n_confidence_examples;
  summary.holdout_accuracy = learned.holdout_accuracy;
  summary.training_mse = conf.training_mse;
  summary.baseline_mse = conf.baseline_mse;
  return summary;
}

TrackSummary track(const LoadedConfig& config, const std::string& scenes_dir,
                   const std::optional<std::string>& models_path,
                   const std::string& out_file, int jobs) {
  const Config& c = config.values;
  c.validate();
  const ScoringParams params = scoring_params_from(c);
  params.validate();
  const auto [aff, conf] = tracking_models(c, models_path);
  const std::vector<std::string> dirs = scene_dirs_or_throw(scenes_dir);

  const int n = static_cast<int>(dirs.size());
  std::vector<std::vector<TrackRecord>> per_scene(static_cast<size_t>(n));
  std::vector<int64_t> n_tracks(static_cast<size_t>(n), 0);
  std::vector<int64_t> n_dropped(static_cast<size_t>(n), 0);
  run_indexed(n, jobs, [&](int i) {
    const SimScene scene = read_scene(dirs[static_cast<size_t>(i)]);
    track_scene(scene, c, aff, conf, params, per_scene[static_cast<size_t>(i)],
                n_tracks[static_cast<size_t>(i)], n_dropped[static_cast<size_t>(i)]);
  });

  std::vector<TrackRecord> records;
  for (std::vector<TrackRecord>& part : per_scene) {
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  std::sort(records.begin(), records.end(),
            [](const TrackRecord& a, const TrackRecord& b) {
              return std::tie(a.scene_id, a.frame_index, a.track_id) <
                     std::tie(b.scene_id, b.frame_index, b.track_id);
            });
  if (const fs::path parent = fs::path(out_file).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  write_track_records(out_file, records);

  TrackSummary summary;
  summary.n_scenes = n;
  for (int64_t v : n_tracks) summary.n_tracks += v;
  for (int64_t v : n_dropped) summary.n_dropped_all_unknown += v;
  summary.n_records = static_cast<int64_t>(records.size());
  return summary;
}

MetricsReport evaluate(const LoadedConfig& config, const std::string& scenes_dir,
                       const std::string& tracks_file, const std::string& out_dir) {
  const Config& c = config.values;
  c.validate();
  const SplitDefinition split = split_by_name(c.split);
  const std::vector<std::string> dirs = scene_dirs_or_throw(scenes_dir);

  std::vector<EvalScene> scenes;
  std::map<std::string, size_t> scene_index;
  for (const std::string& dir : dirs) {
    SimScene s = read_scene(dir);
    EvalScene e;
    e.scene_id = s.scene_id;
    e.gt_frames = std::move(s.gt_frames);
    e.pred_frames.resize(static_cast<size_t>(s.n_frames));
    scene_index[e.scene_id] = scenes.size();
    scenes.push_back(std::move(e));
  }

  for (const TrackRecord& r : read_track_records(tracks_file)) {
    const auto it = scene_index.find(r.scene_id);
    if (it == scene_index.end()) {
      throw std::runtime_error(tracks_file + ": record references unknown scene '" +
                               r.scene_id + "'");
    }
    EvalScene& scene = scenes[it->second];
    if (r.frame_index < 0 ||
        static_cast<size_t>(r.frame_index) >= scene.pred_frames.size()) {
      throw std::runtime_error(tracks_file + ": frame_index " +
                               std::to_string(r.frame_index) +
                               " out of range for scene '" + r.scene_id + "'");
    }
    PredBox p;
    p.box = r.box;
    p.track_id = r.track_id;
    p.class_name = r.class_name;
    p.score = r.confidence;
    scene.pred_frames[static_cast<size_t>(r.frame_index)].push_back(std::move(p));
  }

  const MetricsReport report = evaluate_split(scenes, split, c.match_dist_m,
                                              static_cast<int>(c.n_recall_levels));

  json j;
  j["split"] = {{"name", split.name},
                {"base_classes", split.base_classes},
                {"novel_classes", split.novel_classes}};
  j["match_dist_m"] = c.match_dist_m;
  j["n_recall_levels"] = c.n_recall_levels;
  json classes = json::object();
  for (const ClassMetrics& cm : report.per_class) {
    json levels = json::array();
    for (const RecallLevel& lv : cm.levels) {
      levels.push_back({{"recall_target", lv.recall_target},
                        {"achieved", lv.achieved},
                        {"threshold", lv.threshold},
                        {"tp", lv.tp},
                        {"fp", lv.fp},
                        {"fn", lv.fn},
                        {"ids", lv.ids},
                        {"motar", lv.motar},
                        {"mean_dist", lv.mean_dist}});
    }
    classes[cm.class_name] = {{"gt_count", cm.gt_count},
                              {"amota", cm.amota},
                              {"amotp", cm.amotp},
                              {"levels", levels}};
  }
  j["classes"] = classes;
  j["absent_classes"] = report.absent_classes;
  j["aggregates"] = {
      {"overall", aggregate_json(report.overall_amota, report.overall_amotp)},
      {"base", aggregate_json(report.base_amota, report.base_amotp)},
      {"novel", aggregate_json(report.novel_amota, report.novel_amotp)}};

  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "metrics.json", j.dump(2) + "\n");
  write_text_file(fs::path(out_dir) / "metrics.txt", metrics_text(report));
  return report;
}

PipelineSummary pipeline(const LoadedConfig& config, const std::string& out_root,
                         int jobs) {
  const fs::path root(out_root);
  fs::create_directories(root);
  const std::string scenes_dir = (root / "scenes").string();
  const std::string models_path = (root / "models.json").string();
  const std::string tracks_path = (root / "tracks.jsonl").string();

  PipelineSummary out;
  out.sim = simulate(config, scenes_dir, jobs);
  out.trained = train(config, scenes_dir, models_path);
  out.tracked = track(config, scenes_dir, models_path, tracks_path, jobs);
  out.report = evaluate(config, scenes_dir, tracks_path, out_root);
  return out;
}

}  // namespace ovtrack::cmd
