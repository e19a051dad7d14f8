#include <doctest.h>

#include <cmath>

#include "gsnav/sim.hpp"
#include "oracles.hpp"

using namespace gsnav;

namespace {

// closed square room [0,s]x[0,s] with one target box inside
Scene square_room(double s, const AABB& chair, const Vec2& start,
                  double start_yaw) {
  Scene sc;
  sc.rooms.push_back({Vec2(0, 0), Vec2(s, s)});
  const double t = 0.1, z1 = sc.ceiling_z;
  sc.walls.push_back({Vec3(-t, -t, 0), Vec3(0, s + t, z1)});
  sc.walls.push_back({Vec3(s, -t, 0), Vec3(s + t, s + t, z1)});
  sc.walls.push_back({Vec3(0, -t, 0), Vec3(s, 0, z1)});
  sc.walls.push_back({Vec3(0, s, 0), Vec3(s, s + t, z1)});
  SceneObject obj;
  obj.category = "chair";
  obj.box = chair;
  obj.color = Vec3(0.8, 0.2, 0.2);
  sc.objects.push_back(obj);
  sc.start = Vec3(start.x(), start.y(), 0);
  sc.start_yaw_deg = start_yaw;
  sc.target_category = "chair";
  return sc;
}

ExploreMap painted_map(int w, int h, const std::vector<std::string>& rows) {
  ExploreMap m = ExploreMap::unknown(w, h, 0.05, Vec2(0, 0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const char c = rows[size_t(y)][size_t(x)];
      m.at(x, y) = c == '.' ? CellState::Free
                            : (c == '#' ? CellState::Obstacle : CellState::Unknown);
    }
  return m;
}

bool steps_are_8_connected(const std::vector<Cell>& path) {
  for (size_t i = 1; i < path.size(); ++i) {
    const Cell d = path[i] - path[i - 1];
    if (std::max(std::abs(d.x()), std::abs(d.y())) != 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("scenes serialize losslessly and deterministically") {
  const Scene sc = square_room(
      4.0, {Vec3(2.55, 1.75, 0), Vec3(3.05, 2.25, 0.5)}, Vec2(1.2, 2.0), 0.0);
  const std::string a = scene_to_json(sc);
  const std::string b = scene_to_json(sc);
  CHECK(a == b);

  const Scene back = scene_from_json(a);
  REQUIRE(back.rooms.size() == 1);
  REQUIRE(back.walls.size() == 4);
  REQUIRE(back.objects.size() == 1);
  CHECK(back.objects[0].category == "chair");
  CHECK((back.objects[0].box.min - sc.objects[0].box.min).norm() < 1e-12);
  CHECK((back.objects[0].box.max - sc.objects[0].box.max).norm() < 1e-12);
  CHECK((back.start - sc.start).norm() < 1e-12);
  CHECK(back.start_yaw_deg == sc.start_yaw_deg);
  CHECK(back.target_category == "chair");
  CHECK(scene_to_json(back) == a);
}

TEST_CASE("generated scenes are valid and seed-stable") {
  SceneSpec spec;
  spec.min_rooms = spec.max_rooms = 1;
  spec.min_objects = spec.max_objects = 1;
  spec.catalog = {"chair"};

  const Scene sc = generate_scene(7, spec);
  REQUIRE(sc.rooms.size() == 1);
  REQUIRE_FALSE(sc.targets().empty());
  const RoomRect& room = sc.rooms[0];
  for (const SceneObject& o : sc.objects) {
    CHECK(o.box.min.x() >= room.min.x() - 1e-9);
    CHECK(o.box.max.x() <= room.max.x() + 1e-9);
    CHECK(o.box.min.y() >= room.min.y() - 1e-9);
    CHECK(o.box.max.y() <= room.max.y() + 1e-9);
  }
  CHECK(scene_to_json(generate_scene(7, spec)) == scene_to_json(sc));

  SceneSpec four = spec;
  four.min_rooms = four.max_rooms = 4;
  four.min_objects = 3;
  four.max_objects = 5;
  four.catalog = {"chair", "table", "plant"};
  const Scene big = generate_scene(3, four);
  CHECK(big.rooms.size() == 4);
  // generator-accepted layouts keep the target reachable from the start
  const double d =
      shortest_path_length(big, Vec2(big.start.x(), big.start.y()), 1.0);
  CHECK(d > 0.0);
  CHECK(std::isfinite(d));
}

TEST_CASE("the sensor reads exact center-pixel depths") {
  Scene sc;
  sc.walls.push_back({Vec3(2.0, -3, 0), Vec3(2.1, 3, 2.6)});
  const CameraIntrinsics k = make_intrinsics(161, 121, 90.0);

  SUBCASE("square-on wall at two meters") {
    const Pose p = pose_from_yaw_pitch(Vec3(0, 0, 0.88), 0.0, 0.0);
    const SenseResult s = sense(sc, p, k);
    CHECK(s.depth.at(80, 60) == doctest::Approx(2.0).epsilon(1e-6));
    // lit wall pixels carry a shaded, non-black color
    CHECK(s.rgb.at(80, 60, 0) > 0.0);
  }

  SUBCASE("oblique view divides by the heading cosine") {
    const Pose p = pose_from_yaw_pitch(Vec3(0, 0, 0.88), 45.0, 0.0);
    const SenseResult s = sense(sc, p, k);
    CHECK(s.depth.at(80, 60) ==
          doctest::Approx(2.0 / std::cos(deg2rad(45.0))).epsilon(1e-6));
  }

  SUBCASE("rays through a doorway read the no-return marker") {
    Scene gap;
    gap.walls.push_back({Vec3(2.0, -3, 0), Vec3(2.1, -0.5, 2.6)});
    gap.walls.push_back({Vec3(2.0, 0.5, 0), Vec3(2.1, 3, 2.6)});
    const Pose p = pose_from_yaw_pitch(Vec3(0, 0, 0.88), 0.0, 0.0);
    const SenseResult s = sense(gap, p, k);
    CHECK(s.depth.at(80, 60) == kMaxRange);
    CHECK(s.rgb.at(80, 60, 0) == 0.0);
  }
}

TEST_CASE("the synthetic detector projects exact boxes") {
  const Scene sc = square_room(
      6.0, {Vec3(1.75, 2.75, 0), Vec3(2.25, 3.25, 0.5)}, Vec2(0.5, 3.0), 0.0);
  // camera one meter above the floor plane offset: start (0.5,3), chair
  // centered 1.5 m ahead along +x
  const Pose p = pose_from_yaw_pitch(Vec3(0.5, 3.0, 0.88), 0.0, 0.0);
  const CameraIntrinsics k = make_intrinsics(160, 120, 90.0);
  DetectorConfig cfg;

  SUBCASE("clean detection is pixel-exact") {
    const auto det = detect_objects(sc, p, k, "chair", cfg);
    REQUIRE(det.size() == 1);
    // corners at depth 1.25 / 1.75 m project to these rounded extremes
    CHECK(det[0].bbox.x0 == 64);
    CHECK(det[0].bbox.x1 == 96);
    CHECK(det[0].bbox.y0 == 77);
    CHECK(det[0].bbox.y1 == 116);
    CHECK(det[0].category == "chair");
  }

  SUBCASE("category filters apply") {
    CHECK(detect_objects(sc, p, k, "sofa", cfg).empty());
  }

  SUBCASE("an occluding wall suppresses the detection") {
    Scene blocked = sc;
    blocked.walls.push_back({Vec3(1.2, 2.0, 0), Vec3(1.3, 4.0, 2.6)});
    CHECK(detect_objects(blocked, p, k, "chair", cfg).empty());
  }

  SUBCASE("a unit false-negative rate drops everything") {
    DetectorConfig fn = cfg;
    fn.fn_rate = 1.0;
    CHECK(detect_objects(sc, p, k, "chair", fn).empty());
  }

  SUBCASE("false positives are seeded and categorized") {
    DetectorConfig fp = cfg;
    fp.fp_rate = 1.0;
    const auto det = detect_objects(sc, p, k, "chair", fp, 5);
    CHECK(det.size() >= 2);  // the real box plus at least one phantom
    const auto again = detect_objects(sc, p, k, "chair", fp, 5);
    REQUIRE(det.size() == again.size());
    for (size_t i = 0; i < det.size(); ++i) {
      CHECK(det[i].bbox.x0 == again[i].bbox.x0);
      CHECK(det[i].bbox.y1 == again[i].bbox.y1);
    }
  }
}

TEST_CASE("local plans descend the arrival-time field") {
  SUBCASE("straight corridors walk straight") {
    ExploreMap m = painted_map(10, 3,
                               {
                                   "##########",
                                   "..........",
                                   "##########",
                               });
    const auto path = plan_local(m, Cell(1, 1), Cell(8, 1));
    REQUIRE_FALSE(path.empty());
    CHECK(path.front() == Cell(1, 1));
    CHECK(path.back() == Cell(8, 1));
    CHECK(steps_are_8_connected(path));
    for (size_t i = 1; i < path.size(); ++i) CHECK(path[i].x() > path[i - 1].x());
  }

  SUBCASE("detours stay near the grid optimum") {
    ExploreMap m = painted_map(13, 9,
                               {
                                   ".............",
                                   ".............",
                                   ".............",
                                   "....#########",
                                   "....#........",
                                   "....#........",
                                   ".............",
                                   ".............",
                                   ".............",
                               });
    const Cell start(11, 5), goal(1, 5);
    const auto path = plan_local(m, start, goal);
    REQUIRE_FALSE(path.empty());
    CHECK(path.front() == start);
    CHECK(path.back() == goal);
    CHECK(steps_are_8_connected(path));
    const double optimal = oracle::grid_dist8(m, start, goal);
    CHECK(oracle::polyline_cells(path) <= 1.1 * optimal + 1e-9);
  }

  SUBCASE("blocked goals and bad starts are rejected") {
    ExploreMap m = painted_map(7, 5,
                               {
                                   ".......",
                                   "...#...",
                                   "...#...",
                                   "...#...",
                                   "...#...",
                               });
    CHECK_THROWS_AS(plan_local(m, Cell(1, 2), Cell(3, 2), 0), UnreachableError);
    // sealed against diagonal moves too: every 8-neighbor of the pocket is a wall
    ExploreMap sealed = painted_map(7, 3,
                                    {
                                        "..###..",
                                        "..#.#..",
                                        "..###..",
                                    });
    CHECK_THROWS_AS(plan_local(sealed, Cell(0, 1), Cell(3, 1), 0),
                    UnreachableError);
    CHECK_THROWS_AS(plan_local(sealed, Cell(2, 0), Cell(0, 1), 0),
                    std::invalid_argument);
  }

  SUBCASE("clearance keeps the path off the walls except at endpoints") {
    ExploreMap m = painted_map(11, 7,
                               {
                                   "###########",
                                   "...........",
                                   "...........",
                                   "...........",
                                   "...........",
                                   "...........",
                                   "###########",
                               });
    const auto path = plan_local(m, Cell(1, 1), Cell(9, 1), 2);
    REQUIRE_FALSE(path.empty());
    for (size_t i = 1; i + 1 < path.size(); ++i) {
      int best = 1 << 20;
      for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
          if (m.at(x, y) == CellState::Obstacle)
            best = std::min(best, std::max(std::abs(x - path[i].x()),
                                           std::abs(y - path[i].y())));
      CHECK(best >= 2);
    }
  }
}

TEST_CASE("integrated maps re-render consistently at held-out views") {
  SceneSpec spec;
  spec.min_rooms = spec.max_rooms = 1;
  spec.min_objects = spec.max_objects = 2;
  spec.catalog = {"chair", "table"};
  const Scene sc = generate_scene(11, spec);

  const CameraIntrinsics k = make_intrinsics(96, 72, 90.0);
  const Vec3 eye = sc.start + Vec3(0, 0, 0.88);
  GaussianMap map;
  for (int i = 0; i < 12; ++i) {
    const Pose p = pose_from_yaw_pitch(eye, 30.0 * i, 0.0);
    const SenseResult s = sense(sc, p, k);
    integrate_observation(map, s.rgb, s.depth, p, k, 2, 0.03);
  }
  REQUIRE(map.size() > 0);

  const Pose held_out = pose_from_yaw_pitch(eye, 15.0, 0.0);
  const SenseResult gt = sense(sc, held_out, k);
  MapOptConfig opt;
  opt.iterations = 8;
  refine_map(map, gt.rgb, gt.depth, held_out, k, opt);

  const Pose probe = pose_from_yaw_pitch(eye, 20.0, 0.0);
  const SenseResult probe_gt = sense(sc, probe, k);
  const RenderedView rv = render(map, probe, k);
  CHECK(oracle::psnr(rv.color, probe_gt.rgb) >= 20.0);
}

TEST_CASE("episodes reach visible nearby targets quickly") {
  const Scene sc = square_room(
      4.0, {Vec3(2.55, 1.75, 0), Vec3(3.05, 2.25, 0.5)}, Vec2(1.2, 2.0), 0.0);
  EpisodeConfig cfg;
  cfg.max_steps = 60;
  cfg.seed = 1;
  MockPlanner planner(1);
  const EpisodeResult r = run_episode(sc, cfg, planner);
  CHECK(r.success);
  CHECK(r.failure_kind.empty());
  CHECK(r.steps <= 60);
  CHECK(r.verifications >= 1);
  CHECK(r.shortest_length > 0.0);
  CHECK(r.spl > 0.0);
  CHECK(r.spl <= 1.0);

  // identical configuration replays to identical metrics
  MockPlanner planner2(1);
  const EpisodeResult r2 = run_episode(sc, cfg, planner2);
  CHECK(r2.success == r.success);
  CHECK(r2.steps == r.steps);
  CHECK(r2.path_length == r.path_length);
  CHECK(r2.spl == r.spl);
  CHECK(r2.frontier_decisions == r.frontier_decisions);
}

TEST_CASE("sealed-off targets fail without crashing") {
  Scene sc = square_room(5.0, {Vec3(3.3, 3.3, 0), Vec3(3.7, 3.7, 0.5)},
                         Vec2(1.0, 1.0), 0.0);
  // box the chair in completely
  const double z1 = sc.ceiling_z;
  sc.walls.push_back({Vec3(3.0, 3.0, 0), Vec3(4.0, 3.1, z1)});
  sc.walls.push_back({Vec3(3.0, 3.9, 0), Vec3(4.0, 4.0, z1)});
  sc.walls.push_back({Vec3(3.0, 3.1, 0), Vec3(3.1, 3.9, z1)});
  sc.walls.push_back({Vec3(3.9, 3.1, 0), Vec3(4.0, 3.9, z1)});

  EpisodeConfig cfg;
  cfg.max_steps = 80;
  cfg.seed = 2;
  MockPlanner planner(2);
  const EpisodeResult r = run_episode(sc, cfg, planner);
  CHECK_FALSE(r.success);
  CHECK(r.spl == 0.0);
  CHECK(r.steps <= 80);
  const bool known_kind = r.failure_kind == "step_budget" ||
                          r.failure_kind == "unreachable" ||
                          r.failure_kind == "detection";
  CHECK(known_kind);
}

TEST_CASE("path-weighted success scoring") {
  CHECK(spl_value(true, 10.0, 5.0) == doctest::Approx(0.5));
  CHECK(spl_value(true, 5.0, 5.0) == doctest::Approx(1.0));
  CHECK(spl_value(true, 4.0, 5.0) == doctest::Approx(1.0));  // never above one
  CHECK(spl_value(false, 10.0, 5.0) == 0.0);
  CHECK(spl_value(true, 3.0, 0.0) == 1.0);  // started inside the success region

  std::vector<EpisodeResult> rs(2);
  rs[0].success = true;
  rs[0].spl = 0.8;
  rs[1].success = false;
  rs[1].spl = 0.0;
  rs[1].failure_kind = "detection";
  const BatchMetrics m = compute_metrics(rs);
  CHECK(m.sr == doctest::Approx(0.5));
  CHECK(m.spl == doctest::Approx(0.4));
  CHECK(m.failures.at("detection") == 1);
  CHECK_THROWS_AS(compute_metrics({}), std::invalid_argument);
}
