#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <future>
#include <limits>

#include "gsnav/active.hpp"
#include "gsnav/png_io.hpp"
#include "gsnav/sim.hpp"

namespace gsnav {

namespace {

enum class AgentAction { Forward, TurnLeft, TurnRight, LookUp, LookDown, Stop };

struct ClusterPlan {
  FrontierCluster cluster;
  GuidanceTrajectory traj;
  double unknown = 0;
};

}  // namespace

EpisodeResult run_episode(const Scene& scene, const EpisodeConfig& cfg,
                          Planner& planner) {
  const bool trace = std::getenv("GSNAV_TRACE") != nullptr;
  EpisodeResult res;
  try {
    res.shortest_length = shortest_path_length(
        scene, Vec2(scene.start.x(), scene.start.y()), cfg.success_dist);
  } catch (const std::exception&) {
    res.shortest_length = 0;
  }

  Vec3 p = scene.start;
  double yaw = scene.start_yaw_deg;
  double pitch = 0;

  GaussianMap map;
  std::vector<Pose> history;

  std::vector<AABB> solid = scene.walls;
  for (const SceneObject& o : scene.objects) solid.push_back(o.box);
  auto position_free = [&](const Vec2& q) {
    for (const AABB& s : solid)
      if (s.footprint_distance(q) < cfg.agent_radius) return false;
    return true;
  };

  ExploreMapConfig explore_cfg = cfg.explore;
  {
    const AABB b = scene.bounds();
    explore_cfg.bounds = {{Vec2(b.min.x(), b.min.y()), Vec2(b.max.x(), b.max.y())}};
    explore_cfg.floor_height = scene.floor_z;
  }

  DetectorConfig det = cfg.detector;
  det.seed = hash_mix(cfg.seed, 0xdece11u);

  auto camera_pose = [&] {
    return pose_from_yaw_pitch(p + Vec3(0, 0, cfg.camera_height), yaw, pitch);
  };
  auto redetect = [&](const Pose& pose) {
    return detect_objects(scene, pose, cfg.sensor, scene.target_category, det,
                          0xfedcbaULL);
  };
  MockVerdictProvider mock_verdict(redetect);
  VerdictProvider& verdict = cfg.verdict ? *cfg.verdict : mock_verdict;

  std::deque<AgentAction> act_queue;
  std::deque<Vec2> waypoints;
  bool go_target = false;
  Vec2 target_xy(0, 0);
  bool ap_pending = true;
  int cooldown = 0, replan_age = 0, strikes = 0, blocked_strikes = 0;
  bool stopped = false;
  // positions where a forward step hit unmapped structure; fed back into every
  // rebuilt map so replans stop proposing the same doomed corridor
  std::vector<Vec2> bumps;

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  // sweep the near floor before the first plan: at level pitch the camera
  // only images the floor beyond a meter out, and no amount of level spinning
  // closes the unseen ring that leaves around the start cell
  act_queue.push_back(AgentAction::LookDown);
  for (int i = 0; i < 12; ++i) act_queue.push_back(AgentAction::TurnLeft);
  act_queue.push_back(AgentAction::LookUp);

  auto build_explore = [&] {
    ExploreMap m = build_exploration_map(map, explore_cfg);
    const Cell c = m.world_to_cell(Vec2(p.x(), p.y()));
    const int r = int(std::ceil(0.3 / m.resolution));
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (m.in_bounds(c.x() + dx, c.y() + dy) && dx * dx + dy * dy <= r * r)
          m.at(c.x() + dx, c.y() + dy) = CellState::Free;
    // bumps override the free disc: a collision there is direct evidence
    for (const Vec2& b : bumps) {
      const Cell bc = m.world_to_cell(b);
      if (m.in_bounds(bc.x(), bc.y()))
        m.at(bc.x(), bc.y()) = CellState::Obstacle;
    }
    return m;
  };

  auto to_waypoints = [&](const ExploreMap& m, const std::vector<Cell>& cells) {
    waypoints.clear();
    for (size_t i = 0; i < cells.size(); i += 3)
      waypoints.push_back(m.cell_center(cells[i]));
    if (!cells.empty()) {
      const Vec2 last = m.cell_center(cells.back());
      if (waypoints.empty() || (waypoints.back() - last).norm() > 1e-9)
        waypoints.push_back(last);
    }
    replan_age = 0;
  };

  auto spin_and_retry = [&](const char* exhausted_kind) {
    ++strikes;
    if (strikes > 4) {
      res.failure_kind = exhausted_kind;
      return false;
    }
    // sweep low: when planning stalls the missing cells are usually the
    // near floor, which level views never cover
    act_queue.push_back(AgentAction::LookDown);
    for (int i = 0; i < 6; ++i) act_queue.push_back(AgentAction::TurnLeft);
    act_queue.push_back(AgentAction::LookUp);
    ap_pending = true;
    return true;
  };

  // One exploration planning pass. Queues orientation actions, fills
  // waypoints, or reports that the episode should stop (failure recorded).
  auto plan_explore = [&]() -> bool {
    if (ap_pending) {
      ap_pending = false;
      const PanoramaField pano = render_panorama(
          map, p + Vec3(0, 0, cfg.camera_height), cfg.panorama);
      ActivePerceptionConfig ap = cfg.active;
      ap.tau = cfg.active_tau;
      if (const auto tgt = select_active_viewpoint(pano, ap)) {
        const double dyaw = wrap_deg(tgt->yaw_deg - yaw);
        const int turns = int(std::lround(dyaw / cfg.turn_deg));
        const double want_pitch =
            std::clamp(tgt->pitch_deg, -cfg.look_deg, cfg.look_deg);
        const int looks = int(std::lround(want_pitch / cfg.look_deg));
        for (int i = 0; i < std::abs(turns); ++i)
          act_queue.push_back(turns > 0 ? AgentAction::TurnLeft
                                        : AgentAction::TurnRight);
        if (looks != 0)
          act_queue.push_back(looks > 0 ? AgentAction::LookUp
                                        : AgentAction::LookDown);
        if (!act_queue.empty()) {
          if (trace)
            std::fprintf(stderr, "px ap orient turns=%d looks=%d\n", turns, looks);
          return true;  // orient first, plan after
        }
      }
    }

    const ExploreMap m = build_explore();
    const Cell start = m.world_to_cell(Vec2(p.x(), p.y()));
    const std::vector<Cell> frontiers = extract_frontiers(m);
    const std::vector<FrontierCluster> clusters = cluster_frontiers(m, frontiers);
    if (trace)
      std::fprintf(stderr, "px frontiers=%zu clusters=%zu\n", frontiers.size(),
                   clusters.size());

    if (clusters.empty()) {
      const double unknown_frac =
          double(m.count(CellState::Unknown)) / (double(m.width) * m.height);
      if (unknown_frac < 0.02) {
        res.failure_kind = "detection";  // explored out without a find
        return false;
      }
      return spin_and_retry("unreachable");
    }

    std::vector<ClusterPlan> plans;
    {
      const DistanceField df = chebyshev_distance_field(m);
      std::vector<std::pair<double, size_t>> order;
      for (size_t i = 0; i < clusters.size(); ++i) {
        // the free disc stamped around the agent rings itself with frontier
        // cells; they are artifacts of the stamp, and walking zero meters
        // reveals nothing, so clusters inside the ring never qualify
        const Vec2 rep = m.cell_center(clusters[i].representative);
        if ((rep - Vec2(p.x(), p.y())).norm() <= 0.45) continue;
        order.emplace_back(
            -unknown_area_near(m, clusters[i].representative, 20), i);
      }
      std::sort(order.begin(), order.end());
      for (const auto& [neg_unknown, idx] : order) {
        if (int(plans.size()) >= cfg.max_clusters) break;
        try {
          GuidanceTrajectory traj =
              plan_guidance(m, df, start, clusters[idx], cfg.guidance);
          plans.push_back({clusters[idx], std::move(traj), -neg_unknown});
        } catch (const std::exception&) {
          // unreachable cluster, skip it
        }
      }
    }
    if (plans.empty()) return spin_and_retry("unreachable");
    strikes = 0;

    // free-viewpoint optimization per candidate, fanned out
    std::vector<std::future<ViewpointPose>> futures;
    futures.reserve(plans.size());
    for (const ClusterPlan& plan : plans)
      futures.push_back(std::async(std::launch::async, [&map, &plan, &cfg] {
        const Vec3 frontier_w(plan.cluster.centroid.x(),
                              plan.cluster.centroid.y(),
                              cfg.view_init.camera_height);
        const Pose init = init_viewpoint(plan.traj, plan.cluster, cfg.view_init);
        const std::vector<Vec3> pts =
            lift_trajectory(plan.traj, cfg.view_init.camera_height);
        return optimize_viewpoint(map, init, pts, frontier_w, cfg.view_opt);
      }));

    const CameraIntrinsics fpv_k = make_intrinsics(320, 240, 90.0);
    std::vector<AnnotatedFrame> fpvs;
    std::vector<FrontierOption> options;
    std::vector<FrontierCluster> shown;
    std::vector<GuidanceTrajectory> shown_trajs;
    for (size_t i = 0; i < plans.size(); ++i) {
      const ViewpointPose vp = futures[i].get();
      const Vec3 frontier_w(plans[i].cluster.centroid.x(),
                            plans[i].cluster.centroid.y(),
                            cfg.view_init.camera_height);
      const RenderedView view = render(map, vp.pose, fpv_k);
      fpvs.push_back(
          annotate_fpv(view, frontier_w, cfg.active_tau, plans[i].cluster.id));
      options.push_back({plans[i].cluster.id, plans[i].unknown,
                         plans[i].traj.total_cost(), plans[i].cluster.centroid});
      shown.push_back(plans[i].cluster);
      shown_trajs.push_back(plans[i].traj);
    }
    const AnnotatedFrame bev =
        render_bev(m, camera_pose(), history, shown, shown_trajs);
    const PlannerPrompt prompt = compose_prompt(
        fpvs, bev, "Find the nearest " + scene.target_category + " and stop there.",
        options);

    PlannerDecision decision;
    try {
      decision = decide_frontier(prompt, planner);
    } catch (const std::exception&) {
      res.failure_kind = "reasoning";
      return false;
    }
    ++res.frontier_decisions;
    if (cfg.save_prompts && !cfg.out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "prompt_%03d.png", res.frontier_decisions);
      write_png_rgb((std::filesystem::path(cfg.out_dir) / name).string(),
                    prompt.composite);
    }

    const ClusterPlan* chosen = &plans[0];
    for (const ClusterPlan& plan : plans)
      if (plan.cluster.id == decision.chosen_frontier) chosen = &plan;

    try {
      to_waypoints(m, plan_local(m, start, chosen->cluster.representative,
                                 cfg.plan_clearance_cells));
      if (trace) std::fprintf(stderr, "px local wp=%zu\n", waypoints.size());
    } catch (const std::exception&) {
      // fall back to the guidance polyline
      to_waypoints(m, chosen->traj.nodes);
      if (trace) std::fprintf(stderr, "px fallback wp=%zu\n", waypoints.size());
    }
    return true;
  };

  auto plan_target = [&]() -> bool {
    // optimistic completion: unknown cells count as traversable once the
    // target is confirmed, and replans reroute as sensing fills them in
    ExploreMap m = build_explore();
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (m.at(x, y) == CellState::Unknown) m.at(x, y) = CellState::Free;
    const Cell start = m.world_to_cell(Vec2(p.x(), p.y()));
    // nearest traversable cell to the confirmed target point. Prefer cells the
    // clearance mask keeps open; the target sits against structure, so its
    // closest free cells would otherwise strand the goal in a masked pocket.
    // The stop radius fires well before the goal, so standing off is safe.
    const DistanceField df = chebyshev_distance_field(m);
    Cell goal = start;
    double best = std::numeric_limits<double>::max();
    bool best_clear = false;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        if (m.at(x, y) != CellState::Free) continue;
        const bool clear = df.at(x, y) >= cfg.plan_clearance_cells;
        if (best_clear && !clear) continue;
        const double d = (m.cell_center(Cell(x, y)) - target_xy).norm();
        if ((clear && !best_clear) || d < best) {
          best = d;
          goal = Cell(x, y);
          best_clear = clear;
        }
      }
    if (best == std::numeric_limits<double>::max()) {
      res.failure_kind = "unreachable";
      return false;
    }
    if (trace)
      std::fprintf(stderr,
                   "plan_target t=%d tgt=(%.2f,%.2f) start=(%d,%d) goal=(%d,%d)\n",
                   res.steps, target_xy.x(), target_xy.y(), start.x(), start.y(),
                   goal.x(), goal.y());
    try {
      to_waypoints(m, plan_local(m, start, goal, cfg.plan_clearance_cells));
      return true;
    } catch (const std::exception&) {
    }
    try {
      to_waypoints(m, plan_local(m, start, goal, 0));
      return true;
    } catch (const std::exception&) {
      return spin_and_retry("unreachable");
    }
  };

  auto follow = [&]() -> AgentAction {
    while (!waypoints.empty() &&
           (waypoints.front() - Vec2(p.x(), p.y())).norm() < 0.15)
      waypoints.pop_front();
    if (waypoints.empty()) {
      replan_age = cfg.replan_every + 1;  // force a replan next iteration
      return AgentAction::TurnLeft;
    }
    const Vec2 d = waypoints.front() - Vec2(p.x(), p.y());
    const double dyaw = wrap_deg(rad2deg(std::atan2(d.y(), d.x())) - yaw);
    if (std::abs(dyaw) > cfg.turn_deg * 0.51)
      return dyaw > 0 ? AgentAction::TurnLeft : AgentAction::TurnRight;
    if (pitch > 1e-9) return AgentAction::LookDown;
    if (pitch < -1e-9) return AgentAction::LookUp;
    return AgentAction::Forward;
  };

  while (res.steps < cfg.max_steps && !stopped) {
    const Pose cam = camera_pose();
    const SenseResult sensed = sense(scene, cam, cfg.sensor);
    integrate_observation(map, sensed.rgb, sensed.depth, cam, cfg.sensor,
                          cfg.integrate_stride, cfg.dedup_voxel);
    history.push_back(cam);

    if (cooldown > 0) --cooldown;
    if (!go_target && cooldown == 0) {
      const std::vector<Detection> dets =
          detect_objects(scene, cam, cfg.sensor, scene.target_category, det,
                         uint64_t(res.steps) + 1);
      if (!dets.empty()) {
        ++res.verifications;
        VerifyConfig vc;
        vc.intrinsics = cfg.sensor;
        vc.redetect = redetect;
        const VerifyOutcome outcome =
            verify_target(map, cam, dets[0], verdict, vc);
        if (trace)
          std::fprintf(stderr, "verify t=%d confirmed=%d pos=(%.2f,%.2f)\n",
                       res.steps, int(outcome.confirmed),
                       outcome.target_position.x(), outcome.target_position.y());
        if (outcome.confirmed) {
          go_target = true;
          // refine the goal point with the live sensed depth: median valid
          // depth over the central patch of the detection box, cast along the
          // box-center ray. The minimum would latch onto any foreground
          // occluder clipping the box; the median stays on the object.
          target_xy = Vec2(outcome.target_position.x(),
                           outcome.target_position.y());
          const BBox& b = dets[0].bbox;
          const int cx0 = b.x0 + b.width() / 3, cx1 = b.x1 - b.width() / 3;
          const int cy0 = b.y0 + b.height() / 3, cy1 = b.y1 - b.height() / 3;
          std::vector<double> zs;
          for (int y = cy0; y <= cy1; ++y)
            for (int x = cx0; x <= cx1; ++x) {
              const double z = sensed.depth.at(x, y);
              if (z > kNearPlane && z < kMaxRange) zs.push_back(z);
            }
          if (!zs.empty()) {
            std::nth_element(zs.begin(), zs.begin() + zs.size() / 2, zs.end());
            const double zmed = zs[zs.size() / 2];
            const Vec2 c = b.center();
            const Vec3 p_cam((c.x() - cfg.sensor.cx) / cfg.sensor.fx * zmed,
                             (c.y() - cfg.sensor.cy) / cfg.sensor.fy * zmed,
                             zmed);
            const Vec3 w = cam.to_world(p_cam);
            target_xy = Vec2(w.x(), w.y());
            if (trace)
              std::fprintf(stderr,
                           "refine bbox=[%d,%d..%d,%d] zmed=%.2f n=%zu -> (%.2f,%.2f)\n",
                           b.x0, b.y0, b.x1, b.y1, zmed, zs.size(), w.x(), w.y());
          }
          act_queue.clear();
          waypoints.clear();
          replan_age = cfg.replan_every + 1;
        } else {
          cooldown = cfg.detect_cooldown;
        }
      }
    }

    AgentAction act;
    if (!act_queue.empty()) {
      act = act_queue.front();
      act_queue.pop_front();
    } else if (go_target &&
               (Vec2(p.x(), p.y()) - target_xy).norm() <=
                   0.7 * cfg.success_dist) {
      act = AgentAction::Stop;
    } else if (waypoints.empty() || replan_age > cfg.replan_every) {
      const bool ok = go_target ? plan_target() : plan_explore();
      if (!ok)
        act = AgentAction::Stop;
      else if (!act_queue.empty()) {
        act = act_queue.front();
        act_queue.pop_front();
      } else
        act = follow();
    } else {
      act = follow();
    }

    if (trace)
      std::fprintf(stderr,
                   "t=%3d act=%d p=(%5.2f,%5.2f) yaw=%4.0f pit=%3.0f wp=%zu q=%zu "
                   "goT=%d cd=%d str=%d blk=%d age=%d\n",
                   res.steps, int(act), p.x(), p.y(), yaw, pitch,
                   waypoints.size(), act_queue.size(), int(go_target), cooldown,
                   strikes, blocked_strikes, replan_age);
    ++res.steps;
    ++replan_age;
    if (act == AgentAction::Stop) {
      stopped = true;
      break;
    }
    switch (act) {
      case AgentAction::Forward: {
        const double yr = deg2rad(yaw);
        const Vec3 cand = p + cfg.forward_step * Vec3(std::cos(yr), std::sin(yr), 0);
        if (position_free(Vec2(cand.x(), cand.y()))) {
          res.path_length += (cand - p).norm();
          p = cand;
          blocked_strikes = 0;
        } else {
          bumps.emplace_back(cand.x(), cand.y());
          if (++blocked_strikes >= 2) {
            waypoints.clear();
            act_queue.push_back(AgentAction::TurnLeft);
            blocked_strikes = 0;
          }
        }
        break;
      }
      case AgentAction::TurnLeft:
        yaw = wrap_deg(yaw + cfg.turn_deg);
        break;
      case AgentAction::TurnRight:
        yaw = wrap_deg(yaw - cfg.turn_deg);
        break;
      case AgentAction::LookUp:
        pitch = std::min(pitch + cfg.look_deg, cfg.look_deg);
        break;
      case AgentAction::LookDown:
        pitch = std::max(pitch - cfg.look_deg, -cfg.look_deg);
        break;
      case AgentAction::Stop:
        break;
    }
  }

  double final_dist = std::numeric_limits<double>::max();
  for (const SceneObject* t : scene.targets())
    final_dist = std::min(final_dist,
                          t->box.footprint_distance(Vec2(p.x(), p.y())));

  if (stopped && final_dist <= cfg.success_dist) {
    res.success = true;
    res.failure_kind.clear();
  } else if (stopped) {
    if (res.failure_kind.empty())
      res.failure_kind = go_target ? "detection" : "reasoning";
  } else if (res.failure_kind.empty()) {
    res.failure_kind = "step_budget";
  }

  res.spl = spl_value(res.success, res.path_length, res.shortest_length);
  return res;
}

double spl_value(bool success, double path_length, double shortest_length) {
  if (!success) return 0.0;
  if (shortest_length <= 0) return 1.0;  // started inside the success region
  return shortest_length / std::max(path_length, shortest_length);
}

BatchMetrics compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty())
    throw std::invalid_argument("compute_metrics: empty batch");
  BatchMetrics m;
  for (const EpisodeResult& r : results) {
    m.sr += r.success ? 1.0 : 0.0;
    m.spl += r.spl;
    if (!r.failure_kind.empty()) ++m.failures[r.failure_kind];
  }
  m.sr /= double(results.size());
  m.spl /= double(results.size());
  return m;
}

}  // namespace gsnav
