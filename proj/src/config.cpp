#include <fstream>
#include <initializer_list>
#include <sstream>

#include "gsnav/config.hpp"

#include <nlohmann/json.hpp>

namespace gsnav {

namespace {

using njson = nlohmann::json;

void expect_keys(const njson& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("config: unknown key \"" + where + key + "\"");
  }
}

template <typename T>
void read(const njson& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

void apply_config_text(RunConfig& cfg, const std::string& json_text) {
  const njson j = njson::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("config: document must be an object");
  expect_keys(j, "",
              {"scene", "out_dir", "seed", "planner", "detector", "episode",
               "explore", "guidance", "viewpoint", "panorama", "active"});

  read(j, "scene", cfg.scene_path);
  read(j, "out_dir", cfg.out_dir);
  read(j, "seed", cfg.seed);

  if (j.contains("planner")) {
    const njson& p = j.at("planner");
    expect_keys(p, "planner.", {"kind", "endpoint", "model"});
    read(p, "kind", cfg.planner_kind);
    read(p, "endpoint", cfg.planner_endpoint);
    read(p, "model", cfg.planner_model);
    if (cfg.planner_kind != "mock" && cfg.planner_kind != "remote")
      throw std::invalid_argument("config: planner.kind must be mock or remote");
  }
  if (j.contains("detector")) {
    const njson& d = j.at("detector");
    expect_keys(d, "detector.", {"fp", "fn"});
    read(d, "fp", cfg.episode.detector.fp_rate);
    read(d, "fn", cfg.episode.detector.fn_rate);
  }
  if (j.contains("episode")) {
    const njson& e = j.at("episode");
    expect_keys(e, "episode.",
                {"max_steps", "success_dist", "camera_height", "forward_step",
                 "turn_deg", "look_deg", "agent_radius", "replan_every",
                 "max_clusters", "detect_cooldown", "integrate_stride",
                 "dedup_voxel", "save_prompts", "sensor_width", "sensor_height",
                 "sensor_hfov_deg"});
    read(e, "max_steps", cfg.episode.max_steps);
    read(e, "success_dist", cfg.episode.success_dist);
    read(e, "camera_height", cfg.episode.camera_height);
    read(e, "forward_step", cfg.episode.forward_step);
    read(e, "turn_deg", cfg.episode.turn_deg);
    read(e, "look_deg", cfg.episode.look_deg);
    read(e, "agent_radius", cfg.episode.agent_radius);
    read(e, "replan_every", cfg.episode.replan_every);
    read(e, "max_clusters", cfg.episode.max_clusters);
    read(e, "detect_cooldown", cfg.episode.detect_cooldown);
    read(e, "integrate_stride", cfg.episode.integrate_stride);
    read(e, "dedup_voxel", cfg.episode.dedup_voxel);
    read(e, "save_prompts", cfg.episode.save_prompts);
    int sw = cfg.episode.sensor.width, sh = cfg.episode.sensor.height;
    double hfov = 90.0;
    read(e, "sensor_width", sw);
    read(e, "sensor_height", sh);
    read(e, "sensor_hfov_deg", hfov);
    cfg.episode.sensor = make_intrinsics(sw, sh, hfov);
    if (cfg.episode.max_steps <= 0 || cfg.episode.success_dist <= 0)
      throw std::invalid_argument("config: episode budget fields must be positive");
  }
  if (j.contains("explore")) {
    const njson& x = j.at("explore");
    expect_keys(x, "explore.",
                {"resolution", "tau", "agent_height", "floor_band",
                 "slab_margin_low", "slab_margin_high"});
    read(x, "resolution", cfg.episode.explore.resolution);
    read(x, "tau", cfg.episode.explore.tau);
    read(x, "agent_height", cfg.episode.explore.agent_height);
    read(x, "floor_band", cfg.episode.explore.floor_band);
    read(x, "slab_margin_low", cfg.episode.explore.slab_margin_low);
    read(x, "slab_margin_high", cfg.episode.explore.slab_margin_high);
  }
  if (j.contains("guidance")) {
    const njson& g = j.at("guidance");
    expect_keys(g, "guidance.", {"step_length", "safety_cells", "omega"});
    read(g, "step_length", cfg.episode.guidance.step_length);
    read(g, "safety_cells", cfg.episode.guidance.safety_cells);
    read(g, "omega", cfg.episode.guidance.omega);
  }
  if (j.contains("viewpoint")) {
    const njson& v = j.at("viewpoint");
    expect_keys(v, "viewpoint.",
                {"w_opa", "w_vis", "w_cos", "w_traj", "beta", "iterations",
                 "ray_samples", "step_size", "alpha", "r_min", "r_max"});
    read(v, "w_opa", cfg.episode.view_opt.w_opa);
    read(v, "w_vis", cfg.episode.view_opt.w_vis);
    read(v, "w_cos", cfg.episode.view_opt.w_cos);
    read(v, "w_traj", cfg.episode.view_opt.w_traj);
    read(v, "beta", cfg.episode.view_opt.beta);
    read(v, "iterations", cfg.episode.view_opt.iterations);
    read(v, "ray_samples", cfg.episode.view_opt.ray_samples);
    read(v, "step_size", cfg.episode.view_opt.step_size);
    read(v, "alpha", cfg.episode.view_init.alpha);
    read(v, "r_min", cfg.episode.view_init.r_min);
    read(v, "r_max", cfg.episode.view_init.r_max);
  }
  if (j.contains("panorama")) {
    const njson& p = j.at("panorama");
    expect_keys(p, "panorama.", {"view_width", "view_height", "hfov_deg"});
    read(p, "view_width", cfg.episode.panorama.view_width);
    read(p, "view_height", cfg.episode.panorama.view_height);
    read(p, "hfov_deg", cfg.episode.panorama.hfov_deg);
  }
  if (j.contains("active")) {
    const njson& a = j.at("active");
    expect_keys(a, "active.", {"tau", "eps_deg", "min_pts"});
    read(a, "tau", cfg.episode.active_tau);
    cfg.episode.active.tau = cfg.episode.active_tau;
    read(a, "eps_deg", cfg.episode.active.dbscan_eps_deg);
    read(a, "min_pts", cfg.episode.active.dbscan_min_pts);
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  apply_config_text(cfg, buf.str());
  return cfg;
}

}  // namespace gsnav
