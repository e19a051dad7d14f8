// End-to-end acceptance gate. Each check prints one PASS/FAIL line; the
// process exits nonzero when anything fails.

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "gsnav/active.hpp"
#include "gsnav/guidance.hpp"
#include "gsnav/sim.hpp"
#include "gsnav/verify.hpp"
#include "gsnav/viewpoint.hpp"
#include "oracles.hpp"

using namespace gsnav;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("%s: %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

GaussianPrimitive iso(const Vec3& pos, double opacity, double scale,
                      const Vec3& color = Vec3(1, 1, 1)) {
  GaussianPrimitive g;
  g.position = pos;
  g.opacity = opacity;
  g.scale = Vec3(scale, scale, scale);
  g.color = color;
  return g;
}

GaussianMap random_map(Rng& rng, int count) {
  GaussianMap m;
  for (int i = 0; i < count; ++i) {
    GaussianPrimitive g;
    g.position = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 2.5));
    g.opacity = rng.uniform(0.05, 1.0);
    g.color = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
    g.scale = Vec3(rng.uniform(0.04, 0.4), rng.uniform(0.04, 0.4),
                   rng.uniform(0.04, 0.4));
    const Vec3 axis =
        Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
            .normalized();
    g.rotation = Quat(Eigen::AngleAxisd(rng.uniform(0, M_PI), axis));
    m.add(g);
  }
  return m;
}

ExploreMap random_grid(Rng& rng, int w, int h, double density) {
  ExploreMap m = ExploreMap::unknown(w, h, 0.05, Vec2(0, 0));
  for (CellState& c : m.cells)
    c = rng.uniform() < density ? CellState::Obstacle : CellState::Free;
  return m;
}

// ---------------------------------------------------------------- criterion 1

void check_gradients() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  Rng rng(101);
  for (int trial = 0; trial < 50 && ok; ++trial) {
    Rng tr = rng.fork(trial);
    const int n = 1 + int(tr.next_u64() % 9);
    std::vector<Vec3> traj;
    for (int i = 0; i < n; ++i)
      traj.emplace_back(tr.uniform(-3, 3), tr.uniform(-3, 3), tr.uniform(0, 2));
    const Vec3 pos(tr.uniform(-1, 1), tr.uniform(-1, 1), tr.uniform(0, 2));
    const Vec3 frontier(tr.uniform(2, 5), tr.uniform(-3, 3), tr.uniform(0, 2));
    const double lopa = tr.uniform(0.0, 1.0);
    const double beta = tr.uniform(0.5, 10.0);

    // the softmin part must equal the softmax-weighted direction sum
    double denom = 0;
    Vec3 expect = Vec3::Zero();
    for (const Vec3& p : traj) {
      const double d = (pos - p).norm();
      const double a = std::exp(-beta * d);
      denom += a;
      if (d > 0) expect += a * (pos - p) / d;
    }
    expect /= denom;
    const Vec3 soft = trajectory_softmin_gradient(pos, traj, beta);
    if ((soft - expect).norm() > 1e-10) {
      ok = false;
      detail = "softmin gradient differs from the weighted direction sum";
      break;
    }

    const Vec3 got = trajectory_gradient(pos, traj, frontier, lopa, beta);
    Vec3 fd;
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Vec3 p = pos, q = pos;
      p[c] += h;
      q[c] -= h;
      fd[c] = (loss_trajectory(p, traj, frontier, lopa, beta) -
               loss_trajectory(q, traj, frontier, lopa, beta)) /
              (2 * h);
    }
    if ((got - fd).norm() > 1e-4 * std::max(1.0, fd.norm())) {
      ok = false;
      std::ostringstream s;
      s << "trajectory gradient off at config " << trial;
      detail = s.str();
      break;
    }
  }

  if (ok) {
    GaussianMap map;
    Rng mr(77);
    for (int i = 0; i < 25; ++i)
      map.add(iso(Vec3(mr.uniform(1, 4), mr.uniform(-2, 2), mr.uniform(0, 2)),
                  mr.uniform(0.3, 1.0), mr.uniform(0.1, 0.3)));
    std::vector<Vec3> traj;
    for (int i = 0; i <= 6; ++i) traj.emplace_back(0.5 * i, 0.1 * i, 0.88);
    const Vec3 frontier(4, 0.5, 0.88);
    LossWeights w;
    w.render_width = 48;
    w.render_height = 36;

    for (int trial = 0; trial < 5 && ok; ++trial) {
      const Pose pose = pose_from_yaw_pitch(
          Vec3(0.2 * trial, -0.3 + 0.15 * trial, 0.88), 8.0 * trial - 16.0, 0.0);
      const CompositeEval eval =
          composite_loss_gradient(map, pose, traj, frontier, w);
      Tangent6 fd;
      for (int c = 0; c < 6; ++c) {
        Tangent6 d = Tangent6::Zero();
        d[c] = w.fd_step;
        const double fp =
            composite_losses(map, perturb_pose(pose, d), traj, frontier, w).total;
        d[c] = -w.fd_step;
        const double fm =
            composite_losses(map, perturb_pose(pose, d), traj, frontier, w).total;
        fd[c] = (fp - fm) / (2.0 * w.fd_step);
      }
      if ((eval.gradient - fd).norm() > 1e-2 * std::max(1.0, fd.norm())) {
        ok = false;
        std::ostringstream s;
        s << "composite gradient off at pose " << trial;
        detail = s.str();
      }
    }
  }

  const double dt = seconds_since(t0);
  if (ok && dt >= 60.0) {
    ok = false;
    detail = "exceeded 60 s";
  }
  std::ostringstream s;
  s << "(" << detail << (detail.empty() ? "" : ", ") << std::fixed
    << std::setprecision(1) << dt << " s)";
  report("gradient agreement (softmin identity, trajectory and composite fd)",
         ok, s.str());
}

// ---------------------------------------------------------------- criterion 2

void check_softmin_properties() {
  bool ok = true;
  std::string detail;

  Rng rng(202);
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    Rng tr = rng.fork(trial);
    const int n = 1 + int(tr.next_u64() % 11);
    std::vector<Vec3> traj;
    const Vec3 pos(tr.uniform(-2, 2), tr.uniform(-2, 2), tr.uniform(-2, 2));
    double dmin = oracle::kInf;
    for (int i = 0; i < n; ++i) {
      traj.emplace_back(tr.uniform(-5, 5), tr.uniform(-5, 5), tr.uniform(-5, 5));
      dmin = std::min(dmin, (pos - traj.back()).norm());
    }
    const double beta = tr.uniform(0.1, 50.0);
    const double L = loss_trajectory(pos, traj, Vec3(9, 9, 9), 1.0, beta);
    if (L > dmin + 1e-9 || L < dmin - std::log(double(n)) / beta - 1e-9) {
      ok = false;
      detail = "softmin left its bracket";
    }
  }

  for (int trial = 0; trial < 200 && ok; ++trial) {
    Rng tr = rng.fork(10000 + trial);
    std::vector<Vec3> traj;
    for (int i = 0; i < 6; ++i)
      traj.emplace_back(tr.uniform(2, 6), tr.uniform(-4, 4), tr.uniform(-4, 4));
    const Vec3 pos(tr.uniform(-0.5, 0.5), tr.uniform(-0.5, 0.5), 0);

    Vec3 mean_unit = Vec3::Zero();
    size_t nearest = 0;
    double d0 = oracle::kInf, d1 = oracle::kInf;  // two smallest distances
    for (size_t i = 0; i < traj.size(); ++i) {
      const double d = (pos - traj[i]).norm();
      mean_unit += (pos - traj[i]) / d;
      if (d < d0) {
        d1 = d0;
        d0 = d;
        nearest = i;
      } else {
        d1 = std::min(d1, d);
      }
    }
    mean_unit /= double(traj.size());
    if (d1 - d0 < 1e-2) continue;  // skip near-ties, direction is undefined

    auto angle_deg = [](const Vec3& a, const Vec3& b) {
      const double c = a.normalized().dot(b.normalized());
      return rad2deg(std::acos(std::clamp(c, -1.0, 1.0)));
    };
    const Vec3 flat = trajectory_softmin_gradient(pos, traj, 1e-3);
    const Vec3 sharp = trajectory_softmin_gradient(pos, traj, 1e3);
    if (angle_deg(flat, mean_unit) >= 1.0) {
      ok = false;
      detail = "small-beta direction is not the mean unit vector";
    } else if (angle_deg(sharp, pos - traj[nearest]) >= 1.0) {
      ok = false;
      detail = "large-beta direction is not the nearest-point pull";
    }
  }

  report("softmin bracketing and temperature limits", ok,
         detail.empty() ? "" : "(" + detail + ")");
}

// ---------------------------------------------------------------- criterion 3

void check_rendering() {
  bool ok = true;
  std::string detail;

  Rng rng(303);
  const CameraIntrinsics k = make_intrinsics(40, 30, 90.0);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    Rng tr = rng.fork(trial);
    GaussianMap map = random_map(tr, 5 + int(tr.next_u64() % 36));
    const Pose pose = pose_from_yaw_pitch(
        Vec3(tr.uniform(-1, 1), tr.uniform(-1, 1), tr.uniform(0.5, 1.5)),
        tr.uniform(-180, 180), tr.uniform(-20, 20));
    const RenderedView before = render(map, pose, k);
    for (double o : before.opacity.data)
      if (o < 0.0 || o > 1.0) {
        ok = false;
        detail = "opacity out of [0,1]";
      }
    map.add(iso(Vec3(tr.uniform(-3, 3), tr.uniform(-3, 3), tr.uniform(0, 2.5)),
                tr.uniform(0.1, 1.0), tr.uniform(0.05, 0.4)));
    const RenderedView after = render(map, pose, k);
    for (size_t i = 0; i < after.opacity.data.size() && ok; ++i)
      if (after.opacity.data[i] < before.opacity.data[i] - 1e-12) {
        ok = false;
        detail = "insertion decreased accumulated opacity";
      }
  }

  if (ok) {
    // two primitives on the optical axis: a solid back plane and a 0.6 front
    GaussianMap map;
    map.add(iso(Vec3(0, 0, 2), 1.0, 0.3, Vec3(0, 0, 1)));
    map.add(iso(Vec3(0, 0, 1), 0.6, 0.15, Vec3(1, 0, 0)));
    const CameraIntrinsics center_k = make_intrinsics(65, 49, 90.0);
    const RenderedView v = render(map, Pose{}, center_k);
    const double r = v.color.at(32, 24, 0), g = v.color.at(32, 24, 1),
                 b = v.color.at(32, 24, 2);
    const double o = v.opacity.at(32, 24), d = v.depth.at(32, 24);
    if (std::abs(r - 0.6) > 1e-3 || std::abs(g) > 1e-3 ||
        std::abs(b - 0.4) > 1e-3 || std::abs(o - 1.0) > 1e-3 ||
        std::abs(d - 1.4) > 1e-3) {
      ok = false;
      std::ostringstream s;
      s << "layered fixture off: rgb=(" << r << "," << g << "," << b
        << ") opacity=" << o << " depth=" << d;
      detail = s.str();
    }
  }

  report("compositing bounds, monotonicity and the layered-color fixture", ok,
         detail.empty() ? "" : "(" + detail + ")");
}

// ---------------------------------------------------------------- criterion 4

void check_planners_against_oracles() {
  bool ok = true;
  std::string detail;
  int solvable = 0, fmm_checked = 0;

  Rng rng(404);
  for (int trial = 0; trial < 200 && ok; ++trial) {
    Rng tr = rng.fork(trial);
    const int w = 3 + int(tr.next_u64() % 10);  // up to 12
    const int h = 3 + int(tr.next_u64() % 10);
    ExploreMap m = random_grid(tr, w, h, 0.25);
    const Cell start(int(tr.next_u64() % uint64_t(w)),
                     int(tr.next_u64() % uint64_t(h)));
    const Cell goal(int(tr.next_u64() % uint64_t(w)),
                    int(tr.next_u64() % uint64_t(h)));
    m.at(start.x(), start.y()) = CellState::Free;
    m.at(goal.x(), goal.y()) = CellState::Free;

    const DistanceField df = chebyshev_distance_field(m);
    const std::vector<int> brute = oracle::chebyshev_brute(m);
    for (size_t i = 0; i < brute.size(); ++i)
      if (df.dist[i] != brute[i]) {
        ok = false;
        detail = "distance field differs from brute force";
      }
    if (!ok) break;

    GuidanceConfig cfg;
    cfg.step_length = tr.uniform(0.5, 4.0);
    cfg.safety_cells = double(1 + int(tr.next_u64() % 6));
    cfg.omega = tr.uniform(0.0, 6.0);
    const double expect = oracle::penalized_dijkstra_cost(m, df, start, goal, cfg);

    FrontierCluster goal_cluster;
    goal_cluster.id = 0;
    goal_cluster.representative = goal;
    goal_cluster.centroid = m.cell_center(goal);
    bool threw = false;
    double got = 0;
    try {
      got = plan_guidance(m, df, start, goal_cluster, cfg).total_cost();
    } catch (const UnreachableError&) {
      threw = true;
    }
    if (threw != std::isinf(expect)) {
      ok = false;
      detail = "reachability disagrees with the oracle";
    } else if (!threw && got != expect) {  // bitwise agreement expected
      ok = false;
      std::ostringstream s;
      s << "cost mismatch: got " << std::hexfloat << got << " want " << expect;
      detail = s.str();
    }
    if (!threw) ++solvable;

    // local planner against the unpenalized metric optimum
    if (!threw && !(start == goal)) {
      const double optimal = oracle::grid_dist8(m, start, goal);
      try {
        const std::vector<Cell> path = plan_local(m, start, goal, 0);
        const double len = oracle::polyline_cells(path);
        ++fmm_checked;
        if (len > 1.10 * optimal + 1e-9 || len < optimal - 1e-9) {
          ok = false;
          std::ostringstream s;
          s << "descent path " << len << " vs optimal " << optimal;
          detail = s.str();
        }
      } catch (const UnreachableError&) {
        ok = false;
        detail = "descent planner failed a solvable instance";
      }
    }
  }

  if (ok && (solvable < 50 || fmm_checked < 40)) {
    ok = false;
    detail = "too few solvable instances to be meaningful";
  }
  std::ostringstream s;
  s << "(" << (detail.empty() ? "" : detail + ", ") << solvable
    << " solvable grids)";
  report("grid planners match independent oracles", ok, s.str());
}

// ---------------------------------------------------------------- criterion 5

void check_penalty_point_value() {
  GuidanceConfig cfg;
  cfg.omega = 5.0;
  cfg.safety_cells = 10.0;
  const double got = proximity_penalty(8.0, cfg);
  const double want = 5.0 * std::exp(4.0);
  const bool ok = std::abs(got - want) <= 1e-6 * want;
  std::ostringstream s;
  s << "(got " << std::setprecision(10) << got << ", want " << want << ")";
  report("proximity penalty point value", ok, s.str());
}

// ---------------------------------------------------------------- criterion 6

void check_panorama_tiling() {
  bool ok = true;
  std::string detail;

  GaussianMap empty;
  PanoramaConfig cfg;  // 120 wide per view, 120 degree hfov
  const PanoramaField pano = render_panorama(empty, Vec3(0, 0, 1), cfg);

  if (pano.view_count != 3) {
    ok = false;
    detail = "expected three views";
  }

  // the per-view half extent lands exactly on hfov/2 at the pixel edge
  const double half = rad2deg(std::atan2(cfg.view_width / 2.0, pano.fx));
  if (ok && std::abs(half - cfg.hfov_deg / 2.0) > 1e-12) {
    ok = false;
    detail = "half extent misses hfov/2";
  }

  if (ok) {
    double prev_hi = -180.0;
    for (int v = 0; v < pano.view_count; ++v) {
      const double lo = pano.yaw_of_view(v) - half;
      const double hi = pano.yaw_of_view(v) + half;
      if (std::abs(lo - prev_hi) > 1e-12) {
        ok = false;
        detail = "gap or overlap between adjacent views";
      }
      prev_hi = hi;
    }
    if (ok && std::abs(prev_hi - 180.0) > 1e-12) {
      ok = false;
      detail = "views do not close the circle";
    }
  }

  const double fx_want = 34.641;
  if (ok && std::abs(pano.fx - fx_want) > 1e-3) {
    ok = false;
    std::ostringstream s;
    s << "fx " << pano.fx << " != " << fx_want;
    detail = s.str();
  }

  report("panorama views tile the full circle", ok,
         detail.empty() ? "" : "(" + detail + ")");
}

// ---------------------------------------------------------------- criterion 7

void check_doorway_optimization() {
  const auto t0 = Clock::now();

  // opaque wall across x = 1.5 with a doorway around y = 0
  GaussianMap map;
  for (double y = -2.0; y <= 2.0; y += 0.12) {
    if (std::abs(y) <= 0.35) continue;
    for (double z = 0.0; z <= 2.2; z += 0.12)
      map.add(iso(Vec3(1.5, y, z), 1.0, 0.06, Vec3(0.7, 0.7, 0.7)));
  }
  const Vec3 frontier(3.0, 0.0, 0.88);
  std::vector<Vec3> traj;
  for (const Vec2& p :
       {Vec2(0.2, 1.2), Vec2(0.45, 0.95), Vec2(0.7, 0.7), Vec2(0.95, 0.45),
        Vec2(1.2, 0.2), Vec2(1.45, 0.0)})
    traj.emplace_back(p.x(), p.y(), 0.88);

  // init as the pipeline would: on the guidance approach near the frontier,
  // one step off the door axis so the doorway edge clips the sight line
  const Vec3 start(0.95, 0.55, 0.88);
  const double yaw0 =
      rad2deg(std::atan2(frontier.y() - start.y(), frontier.x() - start.x()));
  const Pose init = pose_from_yaw_pitch(start, yaw0, 0.0);

  LossWeights w;  // the standard weight set, 40 iterations
  const CameraIntrinsics k =
      make_intrinsics(w.render_width, w.render_height, w.render_hfov_deg);

  const OcclusionResult before = loss_occlusion(map, init, k, frontier, w.ray_samples);
  const ViewpointPose out = optimize_viewpoint(map, init, traj, frontier, w);
  const OcclusionResult after =
      loss_occlusion(map, out.pose, k, frontier, w.ray_samples);

  bool ok = true;
  std::string detail;
  if (after.loss > 0.5 * before.loss) {
    ok = false;
    std::ostringstream s;
    s << "occlusion " << before.loss << " -> " << after.loss;
    detail = s.str();
  }

  if (ok) {
    // the final sight line must thread the doorway
    const Vec3 c = out.pose.center();
    const Vec3 dir = frontier - c;
    bool clear = true;
    if (c.x() < 1.5 && frontier.x() > 1.5) {
      const double t = (1.5 - c.x()) / dir.x();
      const double y_cross = c.y() + t * dir.y();
      clear = std::abs(y_cross) < 0.35;
    }
    if (!clear || after.mean_prv < 0.5) {
      ok = false;
      std::ostringstream s;
      s << "final ray still blocked (mean visibility " << after.mean_prv << ")";
      detail = s.str();
    }
  }

  const double dt = seconds_since(t0);
  if (ok && dt >= 120.0) {
    ok = false;
    detail = "exceeded 120 s";
  }
  std::ostringstream s;
  s << "(" << (detail.empty() ? "" : detail + ", ") << "occlusion "
    << std::setprecision(3) << before.loss << " -> " << after.loss << ", "
    << std::fixed << std::setprecision(1) << dt << " s)";
  report("doorway viewpoint optimization clears the sight line", ok, s.str());
}

// ---------------------------------------------------------------- criterion 8

void check_episode_batch() {
  const auto t0 = Clock::now();
  const int episodes = 10;
  std::vector<EpisodeResult> results(episodes);
  std::vector<std::string> errors(episodes);

  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  for (int wkr = 0; wkr < 4; ++wkr)
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= episodes) return;
        const uint64_t seed = uint64_t(i) + 1;
        try {
          const Scene scene = generate_scene(seed);
          EpisodeConfig cfg;
          cfg.seed = seed;
          MockPlanner planner(seed);
          results[i] = run_episode(scene, cfg, planner);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    }));
  for (auto& w : workers) w.get();

  bool ok = true;
  std::string detail;
  for (int i = 0; i < episodes && ok; ++i) {
    if (!errors[i].empty()) {
      ok = false;
      detail = "episode " + std::to_string(i + 1) + " crashed: " + errors[i];
    } else if (results[i].steps > 500) {
      ok = false;
      detail = "episode " + std::to_string(i + 1) + " overran the step budget";
    }
  }

  BatchMetrics m;
  if (ok) {
    m = compute_metrics(results);
    if (m.sr < 0.8) {
      ok = false;
      detail = "success rate below 0.8";
    } else if (m.spl < 0.4) {
      ok = false;
      detail = "spl below 0.4";
    }
  }

  const double dt = seconds_since(t0);
  if (ok && dt >= 600.0) {
    ok = false;
    detail = "exceeded 10 minutes";
  }
  std::ostringstream s;
  s << "(" << (detail.empty() ? "" : detail + ", ") << "sr=" << m.sr
    << " spl=" << std::setprecision(3) << m.spl << ", " << std::fixed
    << std::setprecision(1) << dt << " s)";
  report("seeded episode batch meets success and efficiency floors", ok, s.str());
}

// ---------------------------------------------------------------- criterion 9

struct RelentlessActor : VerdictProvider {
  VerifyActionKind kind;
  int calls = 0;
  explicit RelentlessActor(VerifyActionKind k) : kind(k) {}
  ProviderResponse assess(const RenderedView&, const Detection&, int) override {
    ++calls;
    ProviderResponse r;
    r.kind = ProviderResponse::Kind::Act;
    r.action.kind = kind;
    return r;
  }
};

struct LeavingProvider : VerdictProvider {
  ProviderResponse assess(const RenderedView&, const Detection&, int) override {
    ProviderResponse r;
    r.kind = ProviderResponse::Kind::Leave;
    return r;
  }
};

void check_verification_budget() {
  bool ok = true;
  std::string detail;

  GaussianMap map;
  map.add(iso(Vec3(2, 0, 0.9), 0.9, 0.2));
  const Pose agent = pose_from_yaw_pitch(Vec3(0, 0, 0.88), 0.0, 0.0);
  Detection det;
  det.bbox = {140, 100, 180, 140};
  det.category = "chair";

  VerifyConfig cfg;
  cfg.intrinsics = make_intrinsics(64, 48, 90.0);

  for (const VerifyActionKind kind :
       {VerifyActionKind::Forward, VerifyActionKind::Backward,
        VerifyActionKind::TurnLeft, VerifyActionKind::TurnRight}) {
    RelentlessActor actor(kind);
    const VerifyOutcome out = verify_target(map, agent, det, actor, cfg);
    if (out.actions_used > cfg.max_actions) {
      ok = false;
      detail = "budget exceeded";
    }
    if (out.actions_used != cfg.max_actions || out.confirmed) {
      ok = false;
      detail = "budget resolution should reject without redetection";
    }
    if (actor.calls > cfg.max_actions + 1) {
      ok = false;
      detail = "provider consulted after the budget was spent";
    }
  }

  if (ok) {
    // redetection at the final pose may still confirm, never extend the walk
    VerifyConfig with_redetect = cfg;
    with_redetect.redetect = [](const Pose&) {
      std::vector<Detection> v(1);
      v[0].bbox = {30, 22, 34, 26};
      return v;
    };
    RelentlessActor actor(VerifyActionKind::TurnRight);
    const VerifyOutcome out = verify_target(map, agent, det, actor, with_redetect);
    if (!out.confirmed || out.actions_used != with_redetect.max_actions) {
      ok = false;
      detail = "budget redetection outcome wrong";
    }
  }

  if (ok) {
    LeavingProvider leaver;
    const VerifyOutcome out = verify_target(map, agent, det, leaver, cfg);
    if (out.confirmed || out.actions_used != 0) {
      ok = false;
      detail = "leave must reject immediately";
    }
  }

  report("verification walk respects its action budget", ok,
         detail.empty() ? "" : "(" + detail + ")");
}

// --------------------------------------------------------------- criterion 10

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GSNAV_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

void check_cli_determinism() {
  bool ok = true;
  std::string detail;

  const fs::path root =
      fs::temp_directory_path() /
      ("gsnav_acceptance_" + std::to_string(uint64_t(::getpid())));
  fs::remove_all(root);
  fs::create_directories(root);

  const fs::path scenes = root / "scenes";
  if (run_cli("scene-gen --seed 5 --count 1 --out " + scenes.string()) != 0) {
    ok = false;
    detail = "scene-gen failed";
  }
  const fs::path scene = scenes / "scene_5.json";
  if (ok && !fs::exists(scene)) {
    ok = false;
    detail = "scene file missing";
  }

  if (ok) {
    const std::string common =
        "run --scene " + scene.string() + " --seed 3 --planner mock --out ";
    if (run_cli(common + (root / "run_a").string()) != 0 ||
        run_cli(common + (root / "run_b").string()) != 0) {
      ok = false;
      detail = "episode run failed";
    } else {
      const std::string a = read_file(root / "run_a" / "metrics.json");
      const std::string b = read_file(root / "run_b" / "metrics.json");
      if (a.empty() || a != b) {
        ok = false;
        detail = "run metrics differ between identical invocations";
      }
    }
  }

  if (ok) {
    const std::string common =
        "bench --episodes 3 --seed 9 --jobs 2 --rooms-min 2 --rooms-max 3 --out ";
    if (run_cli(common + (root / "bench_a").string()) != 0 ||
        run_cli(common + (root / "bench_b").string()) != 0) {
      ok = false;
      detail = "bench run failed";
    } else {
      const std::string a = read_file(root / "bench_a" / "bench.json");
      const std::string b = read_file(root / "bench_b" / "bench.json");
      if (a.empty() || a != b) {
        ok = false;
        detail = "bench metrics differ between identical invocations";
      }
    }
  }

  fs::remove_all(root);
  report("command line runs are byte-reproducible", ok,
         detail.empty() ? "" : "(" + detail + ")");
}

}  // namespace

int main() {
  check_gradients();
  check_softmin_properties();
  check_rendering();
  check_planners_against_oracles();
  check_penalty_point_value();
  check_panorama_tiling();
  check_doorway_optimization();
  check_episode_batch();
  check_verification_budget();
  check_cli_determinism();

  if (g_failures > 0) {
    std::printf("%d acceptance check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance checks passed\n");
  return 0;
}
