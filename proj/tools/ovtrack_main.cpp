#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ovtrack/commands.hpp"

namespace {

using ovtrack::LoadedConfig;
using ovtrack::MetricsReport;

struct CommonOpts {
  std::optional<std::string> config_path;
  std::optional<int64_t> seed;
  std::optional<std::string> split;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (flat key-value)");
  cmd->add_option("--seed", opts.seed, "override config key 'seed'");
  cmd->add_option("--split", opts.split, "override config key 'split'")
      ->check(CLI::IsMember({"rare", "urban", "diverse"}));
  cmd->add_option("--jobs", opts.jobs, "scenes processed in parallel")
      ->check(CLI::PositiveNumber);
}

LoadedConfig make_config(const CommonOpts& opts) {
  LoadedConfig config = ovtrack::load_config(opts.config_path);
  if (opts.seed) config.set_from_json("seed", *opts.seed, "override");
  if (opts.split) config.set_from_json("split", *opts.split, "override");
  config.values.validate();
  return config;
}

void print_simulate(const ovtrack::cmd::SimulateSummary& s, const std::string& out) {
  std::printf("simulate: %d scenes x %d frames -> %s\n", s.n_scenes, s.n_frames,
              out.c_str());
  std::printf("  gt boxes %lld, 3d detections %lld, 2d detections %lld\n",
              static_cast<long long>(s.gt_boxes), static_cast<long long>(s.det3d_count),
              static_cast<long long>(s.det2d_count));
}

void print_train(const ovtrack::cmd::TrainSummary& s, const std::string& out) {
  std::printf("train: %lld affinity examples (holdout accuracy %.3f) -> %s\n",
              static_cast<long long>(s.n_affinity_examples), s.holdout_accuracy,
              out.c_str());
  std::printf("  %lld confidence examples, mse %.4f (constant-mean baseline %.4f)\n",
              static_cast<long long>(s.n_confidence_examples), s.training_mse,
              s.baseline_mse);
}

void print_track(const ovtrack::cmd::TrackSummary& s, const std::string& out) {
  std::printf("track: %d scenes -> %s\n", s.n_scenes, out.c_str());
  std::printf("  %lld tracks kept, %lld dropped with no label, %lld records\n",
              static_cast<long long>(s.n_tracks),
              static_cast<long long>(s.n_dropped_all_unknown),
              static_cast<long long>(s.n_records));
}

void print_report(const MetricsReport& report) {
  std::printf("evaluate (split %s):\n", report.split.name.c_str());
  for (const ovtrack::ClassMetrics& cm : report.per_class) {
    std::printf("  %-12s gt %6d  AMOTA %.4f  AMOTP %.4f\n", cm.class_name.c_str(),
                cm.gt_count, cm.amota, cm.amotp);
  }
  std::printf("  %-12s           AMOTA %.4f  AMOTP %.4f\n", "overall",
              report.overall_amota, report.overall_amotp);
  std::printf("  %-12s           AMOTA %.4f  AMOTP %.4f\n", "base",
              report.base_amota, report.base_amotp);
  std::printf("  %-12s           AMOTA %.4f  AMOTP %.4f\n", "novel",
              report.novel_amota, report.novel_amotp);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-vocabulary 3D multi-object tracking pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_dir;
  std::string scenes_dir;
  std::string models_path;
  std::string tracks_path;
  std::optional<std::string> models_opt;

  CLI::App* sim = app.add_subcommand(
      "simulate", "generate synthetic scenes (ground truth + corrupted detections)");
  add_common(sim, opts);
  sim->add_option("--out", out_dir, "output directory for scene_* subdirectories")
      ->required();

  CLI::App* train = app.add_subcommand(
      "train", "fit affinity + confidence models from base-class ground truth");
  add_common(train, opts);
  train->add_option("--scenes", scenes_dir, "directory holding scene_* subdirectories")
      ->required();
  train->add_option("--out", models_path, "output model JSON path")->required();

  CLI::App* track = app.add_subcommand(
      "track", "run tracking, open-vocabulary labeling, and track scoring");
  add_common(track, opts);
  track->add_option("--scenes", scenes_dir, "directory holding scene_* subdirectories")
      ->required();
  track->add_option("--models", models_opt, "trained model JSON (from `train`)");
  track->add_option("--out", tracks_path, "output track record JSONL path")->required();

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score a track file against scene ground truth (AMOTA/AMOTP)");
  add_common(evaluate, opts);
  evaluate->add_option("--scenes", scenes_dir, "directory holding scene_* subdirectories")
      ->required();
  evaluate->add_option("--tracks", tracks_path, "track record JSONL (from `track`)")
      ->required();
  evaluate->add_option("--out", out_dir, "output directory for metrics.{json,txt}")
      ->required();

  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "simulate, train, track, and evaluate under one output root");
  add_common(pipeline, opts);
  pipeline->add_option("--out", out_dir, "output root directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      print_simulate(ovtrack::cmd::simulate(make_config(opts), out_dir, opts.jobs),
                     out_dir);
    } else if (train->parsed()) {
      print_train(ovtrack::cmd::train(make_config(opts), scenes_dir, models_path),
                  models_path);
    } else if (track->parsed()) {
      print_track(ovtrack::cmd::track(make_config(opts), scenes_dir, models_opt,
                                      tracks_path, opts.jobs),
                  tracks_path);
    } else if (evaluate->parsed()) {
      print_report(ovtrack::cmd::evaluate(make_config(opts), scenes_dir, tracks_path,
                                          out_dir));
    } else if (pipeline->parsed()) {
      const LoadedConfig config = make_config(opts);
      const ovtrack::cmd::PipelineSummary s =
          ovtrack::cmd::pipeline(config, out_dir, opts.jobs);
      print_simulate(s.sim, out_dir + "/scenes");
      print_train(s.trained, out_dir + "/models.json");
      print_track(s.tracked, out_dir + "/tracks.jsonl");
      print_report(s.report);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
