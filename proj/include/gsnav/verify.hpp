#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gsnav/splat.hpp"

namespace gsnav {

struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive pixel corners

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  double area() const { return double(width()) * height(); }
  Vec2 center() const { return Vec2((x0 + x1) / 2.0, (y0 + y1) / 2.0); }
};

struct Detection {
  BBox bbox;
  std::string category;
  double confidence = 1.0;
  Pose source_pose;
};

enum class VerifyActionKind { Forward, Backward, TurnLeft, TurnRight, Leave };

constexpr double kVerifyStepMeters = 0.25;
constexpr double kVerifyTurnDeg = 10.0;

struct VerifyAction {
  VerifyActionKind kind = VerifyActionKind::Forward;
};

// Rigid motion in the agent frame: forward/backward slide 0.25 m along the
// horizontal heading, turns change yaw by 10 degrees and keep pitch. Throws
// std::invalid_argument for Leave, which is not a motion.
Pose project_action(const Pose& pose, const VerifyAction& action);

struct ProviderResponse {
  enum class Kind { Confirm, Reject, Leave, Act };
  Kind kind = Kind::Reject;
  VerifyAction action;  // meaningful only for Act
};

class VerdictProvider {
 public:
  virtual ~VerdictProvider() = default;
  virtual ProviderResponse assess(const RenderedView& view,
                                  const Detection& detection,
                                  int actions_used) = 0;
};

// Fresh detections at an arbitrary virtual pose; the episode wires this to
// the synthetic detector.
using RedetectFn = std::function<std::vector<Detection>(const Pose&)>;

// Deterministic stand-in for the remote judge: confirm once the redetected
// box covers min_area_frac of the frame with its center inside the central
// central_frac band, turn toward an off-center box, move forward toward a
// centered-but-small one, and leave when the box is gone.
class MockVerdictProvider : public VerdictProvider {
 public:
  explicit MockVerdictProvider(RedetectFn redetect, double min_area_frac = 0.01,
                               double central_frac = 0.6);
  ProviderResponse assess(const RenderedView& view, const Detection& detection,
                          int actions_used) override;

 private:
  RedetectFn redetect_;
  double min_area_frac_, central_frac_;
};

struct VerifyStep {
  Pose pose;
  ProviderResponse response;
};

struct VerifyConfig {
  int max_actions = 5;
  CameraIntrinsics intrinsics = make_intrinsics(320, 240, 90.0);
  RedetectFn redetect;  // budget resolution; empty means reject at the budget
  std::vector<VerifyStep>* trace = nullptr;
};

struct VerifyOutcome {
  bool confirmed = false;
  Vec3 target_position{0, 0, 0};  // world, meaningful when confirmed
  int actions_used = 0;
  bool provider_failed = false;
};

// Virtual re-verification loop: renders the candidate from the map, asks the
// provider, and walks the virtual pose through returned actions. Stops on
// confirm/reject/leave (leave rejects); an action request arriving with the
// budget already spent resolves by re-running detection at the final virtual
// pose. Never mutates the map or the agent.
VerifyOutcome verify_target(const GaussianMap& map, const Pose& agent_pose,
                            const Detection& detection,
                            VerdictProvider& provider,
                            const VerifyConfig& cfg);

}  // namespace gsnav
