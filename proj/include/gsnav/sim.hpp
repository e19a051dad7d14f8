#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gsnav/active.hpp"
#include "gsnav/explore.hpp"
#include "gsnav/prompt.hpp"
#include "gsnav/verify.hpp"
#include "gsnav/viewpoint.hpp"

namespace gsnav {

struct AABB {
  Vec3 min{0, 0, 0}, max{0, 0, 0};

  Vec3 center() const { return (min + max) / 2.0; }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  // horizontal distance from a point to the xy footprint
  double footprint_distance(const Vec2& p) const {
    const double dx = std::max({min.x() - p.x(), 0.0, p.x() - max.x()});
    const double dy = std::max({min.y() - p.y(), 0.0, p.y() - max.y()});
    return std::hypot(dx, dy);
  }
};

struct RoomRect {
  Vec2 min{0, 0}, max{0, 0};
};

struct SceneObject {
  std::string category;
  AABB box;
  Vec3 color{0.7, 0.2, 0.2};
};

struct Scene {
  std::vector<RoomRect> rooms;
  std::vector<AABB> walls;
  std::vector<SceneObject> objects;
  double floor_z = 0.0;
  double ceiling_z = 2.6;
  Vec3 start{0, 0, 0};  // agent position on the floor
  double start_yaw_deg = 0.0;
  std::string target_category;

  AABB bounds() const;  // tight box around walls, rooms and objects
  std::vector<const SceneObject*> targets() const;
};

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

struct SceneSpec {
  int min_rooms = 2, max_rooms = 4;
  double min_room_size = 2.4, max_room_size = 3.6;  // interior meters per side
  double wall_thickness = 0.1;
  double door_width = 0.9;
  double ceiling = 2.6;
  int min_objects = 3, max_objects = 6;
  std::vector<std::string> catalog{"chair", "table", "plant", "bed", "sofa"};
  std::string target_category = "chair";
  int max_attempts = 40;
};

// Seeded grid layout of door-connected rooms with wall-hugging furniture.
// Rejects and retries layouts until the free-space connectivity and
// target-existence checks pass; throws GenerationError when attempts run out.
Scene generate_scene(uint64_t seed, const SceneSpec& spec = {});

struct SenseResult {
  ImageD rgb;    // 3ch, Lambert-shaded box colors, black where nothing is hit
  ImageD depth;  // camera-z meters; max_range marks no return
};

// Ray-cast RGB-D against the scene boxes (walls, floor and ceiling slabs,
// objects).
SenseResult sense(const Scene& scene, const Pose& pose,
                  const CameraIntrinsics& k, double max_range = kMaxRange);

struct DetectorConfig {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  uint64_t seed = 0;
  double min_pixels = 4.0;  // reject boxes projecting smaller than this area
};

// Synthetic open-vocabulary detector: projects each matching object's box
// corners to a pixel rectangle, keeps it when at least one of nine probe
// rays reaches the object, then applies the seeded false-negative drop and
// false-positive injection. The salt decorrelates calls between steps.
std::vector<Detection> detect_objects(const Scene& scene, const Pose& pose,
                                      const CameraIntrinsics& k,
                                      const std::string& category,
                                      const DetectorConfig& cfg,
                                      uint64_t salt = 0);

// Ground-truth occupancy of the scene footprint at the given resolution;
// cells within agent_radius of a wall or object footprint become obstacles.
ExploreMap scene_occupancy(const Scene& scene, double resolution,
                           double agent_radius);

// Shortest traversable path (meters) from start to any cell whose center
// lies within success_dist of a target instance footprint. Throws
// UnreachableError when no target region is reachable.
double shortest_path_length(const Scene& scene, const Vec2& start,
                            double success_dist, double resolution = 0.05,
                            double agent_radius = 0.2);

// Eikonal arrival-time field from the goal (first-order upwind fast
// sweeping) followed by steepest-descent extraction from the start. Cells
// closer than clearance_cells to an obstacle are not traversed (start and
// goal are exempt). Throws std::invalid_argument when the start is not free
// and UnreachableError when no path exists.
std::vector<Cell> plan_local(const ExploreMap& m, const Cell& start,
                             const Cell& goal, int clearance_cells = 0);

struct EpisodeConfig {
  int max_steps = 500;
  double success_dist = 1.0;
  double camera_height = 0.88;
  double forward_step = 0.2;
  double turn_deg = 30.0;
  double look_deg = 40.0;
  double agent_radius = 0.2;

  CameraIntrinsics sensor = make_intrinsics(160, 120, 90.0);
  int integrate_stride = 6;
  double dedup_voxel = 0.08;

  int replan_every = 25;  // steps between forced planning passes
  int max_clusters = 4;   // frontiers presented to the planner
  int detect_cooldown = 15;
  double active_tau = 0.3;
  int plan_clearance_cells = 4;  // keep paths a body radius off mapped structure

  DetectorConfig detector;
  ExploreMapConfig explore;
  GuidanceConfig guidance;
  ViewpointInitConfig view_init;
  LossWeights view_opt;
  PanoramaConfig panorama;
  ActivePerceptionConfig active;
  uint64_t seed = 0;

  std::string out_dir;        // empty disables artifact dumps
  bool save_prompts = false;  // write prompt composites under out_dir
  VerdictProvider* verdict = nullptr;  // null selects the built-in mock
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double path_length = 0;      // meters actually traveled
  double shortest_length = 0;  // oracle shortest to the success region
  double spl = 0;
  std::string failure_kind;    // reasoning | detection | unreachable | step_budget
  int verifications = 0;
  int frontier_decisions = 0;
};

EpisodeResult run_episode(const Scene& scene, const EpisodeConfig& cfg,
                          Planner& planner);

// shortest / max(path, shortest) on success, 0 on failure; a zero shortest
// length (start already inside the success region) scores 1.
double spl_value(bool success, double path_length, double shortest_length);

struct BatchMetrics {
  double sr = 0;
  double spl = 0;
  std::map<std::string, int> failures;  // histogram over failure kinds
};

// Mean success and mean SPL over a batch; throws std::invalid_argument on an
// empty list.
BatchMetrics compute_metrics(const std::vector<EpisodeResult>& results);

}  // namespace gsnav
