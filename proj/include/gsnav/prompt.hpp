#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gsnav/explore.hpp"
#include "gsnav/guidance.hpp"
#include "gsnav/image.hpp"
#include "gsnav/splat.hpp"

namespace gsnav {

enum class FrameKind { Fpv, Bev };

struct AnnotatedFrame {
  Image8 image;
  FrameKind kind = FrameKind::Fpv;
  int frontier_id = -1;  // fpv frames only
  bool gaze_drawn = false;
  std::vector<std::string> annotations;
};

// Copies the rendered color buffer, tints every pixel whose accumulated
// opacity is below tau purple, and stamps a red gaze disc where the frontier
// projects (skipped, with gaze_drawn = false, when behind the camera or
// off-frame). The view itself is untouched.
AnnotatedFrame annotate_fpv(const RenderedView& view, const Vec3& frontier_world,
                            double tau, int frontier_id);

// Top-down map image: white free / gray unknown / black obstacle cells,
// traveled path as a blue polyline, the agent as a purple triangle pointing
// along its yaw, guidance trajectories in green, and one numbered red marker
// per frontier cluster.
AnnotatedFrame render_bev(const ExploreMap& explore, const Pose& agent_pose,
                          const std::vector<Pose>& history,
                          const std::vector<FrontierCluster>& frontiers,
                          const std::vector<GuidanceTrajectory>& trajectories);

struct FrontierOption {
  int id = -1;
  double unknown_cells = 0;  // unknown area around the frontier
  double path_cost = 0;      // guidance trajectory cost
  Vec2 centroid{0, 0};
};

struct PlannerPrompt {
  Image8 composite;
  std::string instruction;
  std::string cot_text;
  std::vector<FrontierOption> options;
};

// Tiles the FPVs (one row up to three frames, two rows beyond), stamps each
// tile with its frontier id, appends the BEV on the right, and fills the
// reasoning template. The finished text ends with the reply contract line
// "CHOICE: <id>". Throws std::invalid_argument without at least one FPV or
// when the template id is unknown ("cot-v1" is the only built-in).
PlannerPrompt compose_prompt(const std::vector<AnnotatedFrame>& fpvs,
                             const AnnotatedFrame& bev,
                             const std::string& instruction,
                             const std::vector<FrontierOption>& options,
                             const std::string& template_id = "cot-v1");

struct PlannerDecision {
  int chosen_frontier = -1;
  std::map<int, double> scores;
  std::string rationale;
  bool used_fallback = false;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual PlannerDecision decide(const PlannerPrompt& prompt) = 0;
};

// Scores each option as unknown_weight * unknown_cells - cost_weight *
// path_cost; ties resolve by a seeded draw among the tied ids.
class MockPlanner : public Planner {
 public:
  explicit MockPlanner(uint64_t seed = 0, double unknown_weight = 1.0,
                       double cost_weight = 0.1);
  PlannerDecision decide(const PlannerPrompt& prompt) override;

 private:
  uint64_t seed_;
  double w_unknown_, w_cost_;
};

struct RemotePlannerConfig {
  std::string endpoint;  // e.g. http://host:port/v1/chat/completions
  std::string model = "default";
  std::string api_key;
  int timeout_sec = 60;
  int retries = 2;
};

// Chat-completion wire: one text part and one base64 PNG image part per
// request. Transport errors, non-200 replies, and unparseable responses fall
// back to the cheapest-trajectory option and mark the decision.
class RemotePlanner : public Planner {
 public:
  explicit RemotePlanner(RemotePlannerConfig cfg);
  PlannerDecision decide(const PlannerPrompt& prompt) override;

 private:
  RemotePlannerConfig cfg_;
};

// Runs the planner and validates the returned id; anything outside the
// option set degrades to the nearest-by-cost fallback. Throws
// std::invalid_argument when the prompt has no options.
PlannerDecision decide_frontier(const PlannerPrompt& prompt, Planner& planner);

// Unknown-cell count within a Chebyshev radius, used to score frontiers.
double unknown_area_near(const ExploreMap& m, const Cell& cell, int radius);

// Extracts the trailing "CHOICE: <id>" line (searched from the end).
bool parse_choice_line(const std::string& text, int& id_out);

}  // namespace gsnav
