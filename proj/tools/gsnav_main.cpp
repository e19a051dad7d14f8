#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include "gsnav/active.hpp"
#include "gsnav/config.hpp"
#include "gsnav/png_io.hpp"
#include "gsnav/sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;
using namespace gsnav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::optional<std::string> config, scene, out, planner, endpoint, model;
  std::optional<uint64_t> seed;
  std::optional<double> fp, fn;
  bool save_prompts = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--scene", f.scene, "scene JSON file");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--planner", f.planner, "planner kind: mock | remote");
  cmd->add_option("--endpoint", f.endpoint, "remote planner endpoint URL");
  cmd->add_option("--model", f.model, "remote planner model name");
  cmd->add_option("--fp", f.fp, "detector false-positive rate");
  cmd->add_option("--fn", f.fn, "detector false-negative rate");
  cmd->add_flag("--save-prompts", f.save_prompts, "write prompt composites");
}

// flag > config file > default
RunConfig resolve_config(const CommonFlags& f) {
  RunConfig rc;
  if (f.config) rc = load_run_config(*f.config);
  if (f.scene) rc.scene_path = *f.scene;
  if (f.out) rc.out_dir = *f.out;
  if (f.seed) rc.seed = *f.seed;
  if (f.planner) rc.planner_kind = *f.planner;
  if (f.endpoint) rc.planner_endpoint = *f.endpoint;
  if (f.model) rc.planner_model = *f.model;
  if (f.fp) rc.episode.detector.fp_rate = *f.fp;
  if (f.fn) rc.episode.detector.fn_rate = *f.fn;
  if (f.save_prompts) rc.episode.save_prompts = true;
  if (rc.planner_kind != "mock" && rc.planner_kind != "remote")
    throw ConfigError("planner must be mock or remote");
  return rc;
}

std::unique_ptr<Planner> make_planner(const RunConfig& rc) {
  if (rc.planner_kind == "mock")
    return std::make_unique<MockPlanner>(rc.seed);
  const char* key = std::getenv("GSNAV_API_KEY");
  if (!key || !*key)
    throw ConfigError("remote planner requires GSNAV_API_KEY in the environment");
  RemotePlannerConfig pc;
  pc.endpoint = rc.planner_endpoint;
  pc.model = rc.planner_model;
  pc.api_key = key;
  return std::make_unique<RemotePlanner>(pc);
}

ordered result_to_json(uint64_t seed, const std::string& scene,
                       const std::string& planner, const EpisodeResult& r) {
  ordered j;
  j["scene"] = scene;
  j["seed"] = seed;
  j["planner"] = planner;
  j["success"] = r.success;
  j["steps"] = r.steps;
  j["path_length"] = r.path_length;
  j["shortest_length"] = r.shortest_length;
  j["spl"] = r.spl;
  j["failure"] = r.failure_kind;
  j["verifications"] = r.verifications;
  j["frontier_decisions"] = r.frontier_decisions;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Image8 explore_to_image(const ExploreMap& m) {
  Image8 img = Image8::filled(std::max(m.width, 1), std::max(m.height, 1),
                              128, 128, 128);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      const CellState s = m.at(x, y);
      const uint8_t v = s == CellState::Free ? 255
                        : s == CellState::Obstacle ? 0 : 128;
      img.set(x, m.height - 1 - y, v, v, v);
    }
  return img;
}

int cmd_run(const CommonFlags& flags) {
  const RunConfig rc = resolve_config(flags);
  if (rc.scene_path.empty()) throw ConfigError("run: --scene is required");
  if (!fs::exists(rc.scene_path))
    throw ConfigError("run: scene file not found: " + rc.scene_path);
  const std::unique_ptr<Planner> planner = make_planner(rc);

  Scene scene;
  try {
    scene = load_scene(rc.scene_path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("run: bad scene file: ") + e.what());
  }

  EpisodeConfig ec = rc.episode;
  ec.seed = rc.seed;
  ec.out_dir = rc.out_dir;
  fs::create_directories(rc.out_dir);

  const EpisodeResult r = run_episode(scene, ec, *planner);
  const ordered j = result_to_json(rc.seed, rc.scene_path, rc.planner_kind, r);
  write_text(fs::path(rc.out_dir) / "metrics.json", j.dump(2) + "\n");

  std::cout << (r.success ? "success" : "failure") << " steps=" << r.steps
            << " path=" << std::fixed << std::setprecision(2) << r.path_length
            << " spl=" << std::setprecision(3) << r.spl;
  if (!r.failure_kind.empty()) std::cout << " (" << r.failure_kind << ")";
  std::cout << "\n";
  return kExitOk;
}

struct BenchFlags {
  CommonFlags common;
  int episodes = 10;
  int jobs = 4;
  int rooms_min = 2, rooms_max = 4;
  std::string target = "chair";
};

int cmd_bench(const BenchFlags& bf) {
  if (bf.episodes <= 0) throw ConfigError("bench: need at least one episode");
  if (bf.jobs <= 0) throw ConfigError("bench: jobs must be positive");
  const RunConfig rc = resolve_config(bf.common);
  fs::create_directories(rc.out_dir);

  SceneSpec spec;
  spec.min_rooms = bf.rooms_min;
  spec.max_rooms = bf.rooms_max;
  spec.target_category = bf.target;

  std::vector<EpisodeResult> results(bf.episodes);
  std::vector<uint64_t> seeds(bf.episodes);
  for (int i = 0; i < bf.episodes; ++i) seeds[i] = rc.seed + uint64_t(i);

  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  std::mutex fail_mutex;
  std::optional<std::pair<uint64_t, std::string>> failed;
  const int jobs = std::min(bf.jobs, bf.episodes);
  for (int w = 0; w < jobs; ++w)
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= bf.episodes) return;
        try {
          const Scene scene = generate_scene(seeds[i], spec);
          EpisodeConfig ec = rc.episode;
          ec.seed = seeds[i];
          ec.out_dir.clear();  // per-episode artifacts off in batches
          MockPlanner mock(seeds[i]);
          std::unique_ptr<Planner> remote;
          Planner* planner = &mock;
          if (rc.planner_kind == "remote") {
            RunConfig rcc = rc;
            rcc.seed = seeds[i];
            remote = make_planner(rcc);
            planner = remote.get();
          }
          results[i] = run_episode(scene, ec, *planner);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(fail_mutex);
          if (!failed) failed = {seeds[i], e.what()};
          return;
        }
      }
    }));
  for (auto& w : workers) w.get();
  if (failed)
    throw std::runtime_error("bench: episode with seed " +
                             std::to_string(failed->first) +
                             " failed: " + failed->second);

  const BatchMetrics metrics = compute_metrics(results);
  // histogram buckets: reasoning / detection / other
  int reasoning = 0, detection = 0, other = 0;
  for (const auto& [kind, count] : metrics.failures) {
    if (kind == "reasoning") reasoning += count;
    else if (kind == "detection") detection += count;
    else other += count;
  }

  ordered j;
  j["episodes"] = ordered::array();
  for (int i = 0; i < bf.episodes; ++i)
    j["episodes"].push_back(
        result_to_json(seeds[i], "generated", rc.planner_kind, results[i]));
  j["summary"] = {{"sr", metrics.sr},
                  {"spl", metrics.spl},
                  {"failures",
                   {{"reasoning", reasoning},
                    {"detection", detection},
                    {"other", other}}}};
  write_text(fs::path(rc.out_dir) / "bench.json", j.dump(2) + "\n");

  std::cout << "seed      success  steps  path(m)  spl     failure\n";
  for (int i = 0; i < bf.episodes; ++i) {
    const EpisodeResult& r = results[i];
    std::cout << std::left << std::setw(10) << seeds[i] << std::setw(9)
              << (r.success ? "yes" : "no") << std::setw(7) << r.steps
              << std::setw(9) << std::fixed << std::setprecision(2)
              << r.path_length << std::setw(8) << std::setprecision(3) << r.spl
              << (r.failure_kind.empty() ? "-" : r.failure_kind) << "\n";
  }
  std::cout << "SR=" << std::setprecision(3) << metrics.sr
            << " SPL=" << metrics.spl << " failures: reasoning=" << reasoning
            << " detection=" << detection << " other=" << other << "\n";
  return kExitOk;
}

struct RenderFlags {
  CommonFlags common;
  std::optional<std::string> map_path;
  bool trace_opt = false;
};

int cmd_render(const RenderFlags& rf) {
  const RunConfig rc = resolve_config(rf.common);
  if (!rf.map_path && rc.scene_path.empty())
    throw ConfigError("render: need --map or --scene");
  fs::create_directories(rc.out_dir);

  GaussianMap map;
  Vec3 eye(0, 0, rc.episode.camera_height);
  double eye_yaw = 0;
  std::optional<Scene> scene;
  if (!rc.scene_path.empty()) {
    if (!fs::exists(rc.scene_path))
      throw ConfigError("render: scene file not found: " + rc.scene_path);
    scene = load_scene(rc.scene_path);
    eye = scene->start + Vec3(0, 0, rc.episode.camera_height);
    eye_yaw = scene->start_yaw_deg;
  }
  if (rf.map_path) {
    if (!fs::exists(*rf.map_path))
      throw ConfigError("render: map file not found: " + *rf.map_path);
    map = load_map(*rf.map_path);
    if (!scene && map.size() > 0) {
      Vec3 lo = map.at(0).position, hi = lo;
      for (size_t i = 1; i < map.size(); ++i) {
        lo = lo.cwiseMin(map.at(i).position);
        hi = hi.cwiseMax(map.at(i).position);
      }
      eye = Vec3((lo.x() + hi.x()) / 2, (lo.y() + hi.y()) / 2,
                 rc.episode.camera_height);
    }
  } else {
    // build a quick map by spinning the sensor at the start pose
    for (int i = 0; i < 12; ++i) {
      const Pose cam = pose_from_yaw_pitch(eye, eye_yaw + 30.0 * i, 0.0);
      const SenseResult s = sense(*scene, cam, rc.episode.sensor);
      integrate_observation(map, s.rgb, s.depth, cam, rc.episode.sensor,
                            rc.episode.integrate_stride, rc.episode.dedup_voxel);
    }
  }

  // panorama of the opacity field
  const PanoramaField pano = render_panorama(map, eye, rc.episode.panorama);
  {
    Image8 img = Image8::filled(pano.opacity.width, pano.opacity.height, 0, 0, 0);
    for (int y = 0; y < pano.opacity.height; ++y)
      for (int x = 0; x < pano.opacity.width; ++x) {
        const uint8_t v = to_byte(pano.opacity.at(x, y));
        img.set(x, y, v, v, v);
      }
    write_png_rgb((fs::path(rc.out_dir) / "panorama_opacity.png").string(), img);
  }

  ExploreMapConfig xc = rc.episode.explore;
  if (scene) {
    const AABB b = scene->bounds();
    xc.bounds = std::make_pair(Vec2(b.min.x(), b.min.y()),
                               Vec2(b.max.x(), b.max.y()));
    xc.floor_height = scene->floor_z;
  }
  const ExploreMap m = build_exploration_map(map, xc);
  write_png_rgb((fs::path(rc.out_dir) / "explore.png").string(),
                explore_to_image(m));

  const Pose start_pose = pose_from_yaw_pitch(eye, eye_yaw, 0.0);
  const std::vector<Cell> frontiers = extract_frontiers(m);
  const std::vector<FrontierCluster> clusters = cluster_frontiers(m, frontiers);

  std::vector<GuidanceTrajectory> trajs;
  std::vector<FrontierCluster> shown;
  const Cell start_cell = m.world_to_cell(Vec2(eye.x(), eye.y()));
  if (m.in_bounds(start_cell.x(), start_cell.y()) &&
      m.at(start_cell.x(), start_cell.y()) == CellState::Free) {
    const DistanceField df = chebyshev_distance_field(m);
    for (const FrontierCluster& c : clusters) {
      if (int(shown.size()) >= rc.episode.max_clusters) break;
      try {
        trajs.push_back(plan_guidance(m, df, start_cell, c, rc.episode.guidance));
        shown.push_back(c);
      } catch (const std::exception&) {
      }
    }
  }
  write_png_rgb((fs::path(rc.out_dir) / "bev.png").string(),
                render_bev(m, start_pose, {start_pose}, shown, trajs).image);

  // always emit the station-point FPV; per-frontier FPVs when planning worked
  const CameraIntrinsics fpv_k = make_intrinsics(320, 240, 90.0);
  {
    const RenderedView view = render(map, start_pose, fpv_k);
    const Vec3 ahead = eye + 2.0 * start_pose.forward_world();
    write_png_rgb((fs::path(rc.out_dir) / "fpv_start.png").string(),
                  annotate_fpv(view, ahead, rc.episode.active_tau, 0).image);
  }
  for (size_t i = 0; i < shown.size(); ++i) {
    const Vec3 fw(shown[i].centroid.x(), shown[i].centroid.y(),
                  rc.episode.view_init.camera_height);
    const Pose init = init_viewpoint(trajs[i], shown[i], rc.episode.view_init);
    std::vector<ViewpointLosses> trace;
    const ViewpointPose vp = optimize_viewpoint(
        map, init, lift_trajectory(trajs[i], rc.episode.view_init.camera_height),
        fw, rc.episode.view_opt, rf.trace_opt ? &trace : nullptr);
    const RenderedView view = render(map, vp.pose, fpv_k);
    char name[64];
    std::snprintf(name, sizeof(name), "fpv_%02d.png", shown[i].id);
    write_png_rgb((fs::path(rc.out_dir) / name).string(),
                  annotate_fpv(view, fw, rc.episode.active_tau, shown[i].id).image);
    if (rf.trace_opt) {
      std::ostringstream txt;
      txt << "iter opa vis cos traj total\n";
      for (size_t k = 0; k < trace.size(); ++k)
        txt << k << " " << trace[k].opa << " " << trace[k].vis << " "
            << trace[k].cos << " " << trace[k].traj << " " << trace[k].total
            << "\n";
      std::snprintf(name, sizeof(name), "opt_trace_%02d.txt", shown[i].id);
      write_text(fs::path(rc.out_dir) / name, txt.str());
    }
  }
  std::cout << "rendered " << (2 + shown.size() + 2) << " artifacts to "
            << rc.out_dir << "\n";
  return kExitOk;
}

struct SceneGenFlags {
  uint64_t seed = 0;
  int count = 1;
  std::string out = "scenes";
  int rooms_min = 2, rooms_max = 4;
  int objects_min = 3, objects_max = 6;
  std::string target = "chair";
};

int cmd_scene_gen(const SceneGenFlags& sf) {
  if (sf.count <= 0) throw ConfigError("scene-gen: count must be positive");
  SceneSpec spec;
  spec.min_rooms = sf.rooms_min;
  spec.max_rooms = sf.rooms_max;
  spec.min_objects = sf.objects_min;
  spec.max_objects = sf.objects_max;
  spec.target_category = sf.target;
  fs::create_directories(sf.out);
  for (int i = 0; i < sf.count; ++i) {
    const uint64_t seed = sf.seed + uint64_t(i);
    const Scene scene = generate_scene(seed, spec);
    char name[64];
    std::snprintf(name, sizeof(name), "scene_%llu.json",
                  static_cast<unsigned long long>(seed));
    save_scene(scene, (fs::path(sf.out) / name).string());
    std::cout << name << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaussian-splat exploration and navigation toolkit"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one episode on a scene");
  add_common(run, run_flags);

  BenchFlags bench_flags;
  CLI::App* bench = app.add_subcommand("bench", "run a seeded episode batch");
  add_common(bench, bench_flags.common);
  bench->add_option("--episodes", bench_flags.episodes, "number of episodes");
  bench->add_option("--jobs", bench_flags.jobs, "parallel workers");
  bench->add_option("--rooms-min", bench_flags.rooms_min, "minimum rooms");
  bench->add_option("--rooms-max", bench_flags.rooms_max, "maximum rooms");
  bench->add_option("--target", bench_flags.target, "target category");

  RenderFlags render_flags;
  CLI::App* render_cmd = app.add_subcommand("render", "debug renders of a map or scene");
  add_common(render_cmd, render_flags.common);
  render_cmd->add_option("--map", render_flags.map_path, "gaussian map dump");
  render_cmd->add_flag("--trace-opt", render_flags.trace_opt,
                       "write per-iteration viewpoint losses");

  SceneGenFlags gen_flags;
  CLI::App* gen = app.add_subcommand("scene-gen", "generate synthetic scenes");
  gen->add_option("--seed", gen_flags.seed, "base seed");
  gen->add_option("--count", gen_flags.count, "number of scenes");
  gen->add_option("--out", gen_flags.out, "output directory");
  gen->add_option("--rooms-min", gen_flags.rooms_min, "minimum rooms");
  gen->add_option("--rooms-max", gen_flags.rooms_max, "maximum rooms");
  gen->add_option("--objects-min", gen_flags.objects_min, "minimum objects");
  gen->add_option("--objects-max", gen_flags.objects_max, "maximum objects");
  gen->add_option("--target", gen_flags.target, "target category");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (bench->parsed()) return cmd_bench(bench_flags);
    if (render_cmd->parsed()) return cmd_render(render_flags);
    if (gen->parsed()) return cmd_scene_gen(gen_flags);
    std::cerr << "no subcommand given\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
