#include "gsnav/verify.hpp"

#include <cmath>

namespace gsnav {

Pose project_action(const Pose& pose, const VerifyAction& action) {
  switch (action.kind) {
    case VerifyActionKind::Forward:
    case VerifyActionKind::Backward: {
      const double yaw = deg2rad(pose.yaw_deg());
      const Vec3 heading(std::cos(yaw), std::sin(yaw), 0.0);
      const double sign = action.kind == VerifyActionKind::Forward ? 1.0 : -1.0;
      Pose out = pose;
      out.translation = -(out.rotation * (pose.center() + sign * kVerifyStepMeters * heading));
      return out;
    }
    case VerifyActionKind::TurnLeft:
    case VerifyActionKind::TurnRight: {
      const double sign = action.kind == VerifyActionKind::TurnLeft ? 1.0 : -1.0;
      return pose_from_yaw_pitch(pose.center(),
                                 pose.yaw_deg() + sign * kVerifyTurnDeg,
                                 pose.pitch_deg());
    }
    case VerifyActionKind::Leave:
      break;
  }
  throw std::invalid_argument("project_action: leave is not a motion");
}

MockVerdictProvider::MockVerdictProvider(RedetectFn redetect,
                                         double min_area_frac,
                                         double central_frac)
    : redetect_(std::move(redetect)),
      min_area_frac_(min_area_frac),
      central_frac_(central_frac) {}

ProviderResponse MockVerdictProvider::assess(const RenderedView& view,
                                             const Detection& detection,
                                             int /*actions_used*/) {
  (void)detection;
  ProviderResponse r;
  if (!redetect_) {
    r.kind = ProviderResponse::Kind::Leave;
    return r;
  }
  const std::vector<Detection> fresh = redetect_(view.pose);
  if (fresh.empty()) {
    r.kind = ProviderResponse::Kind::Leave;
    return r;
  }
  const Detection* best = &fresh[0];
  for (const Detection& d : fresh)
    if (d.bbox.area() > best->bbox.area()) best = &d;

  const double w = view.intrinsics.width, h = view.intrinsics.height;
  const Vec2 c = best->bbox.center();
  const double half_band = central_frac_ / 2.0;
  const bool centered_x = std::abs(c.x() - (w - 1) / 2.0) <= half_band * w;
  const bool centered_y = std::abs(c.y() - (h - 1) / 2.0) <= half_band * h;
  const bool big = best->bbox.area() >= min_area_frac_ * w * h;

  if (big && centered_x && centered_y) {
    r.kind = ProviderResponse::Kind::Confirm;
    return r;
  }
  r.kind = ProviderResponse::Kind::Act;
  if (!centered_x)
    r.action.kind = c.x() < (w - 1) / 2.0 ? VerifyActionKind::TurnLeft
                                          : VerifyActionKind::TurnRight;
  else
    r.action.kind = VerifyActionKind::Forward;
  return r;
}

namespace {

// Back-project a pixel through the rendered depth to a world point.
Vec3 pixel_to_world(const RenderedView& view, const Vec2& pixel) {
  const CameraIntrinsics& k = view.intrinsics;
  const int px = std::clamp(int(std::lround(pixel.x())), 0, k.width - 1);
  const int py = std::clamp(int(std::lround(pixel.y())), 0, k.height - 1);
  const double z = std::max(view.occlusion_depth(px, py, kMaxRange), kNearPlane);
  const Vec3 p_cam((pixel.x() - k.cx) / k.fx * z, (pixel.y() - k.cy) / k.fy * z,
                   z);
  return view.pose.to_world(p_cam);
}

}  // namespace

VerifyOutcome verify_target(const GaussianMap& map, const Pose& agent_pose,
                            const Detection& detection,
                            VerdictProvider& provider,
                            const VerifyConfig& cfg) {
  VerifyOutcome out;
  Pose virt = agent_pose;

  for (;;) {
    const RenderedView view = render(map, virt, cfg.intrinsics);
    ProviderResponse resp;
    try {
      resp = provider.assess(view, detection, out.actions_used);
    } catch (const std::exception&) {
      out.provider_failed = true;
      return out;
    }
    if (cfg.trace) cfg.trace->push_back({virt, resp});

    switch (resp.kind) {
      case ProviderResponse::Kind::Confirm: {
        out.confirmed = true;
        Vec2 pixel = detection.bbox.center();
        if (cfg.redetect) {
          const std::vector<Detection> fresh = cfg.redetect(virt);
          if (!fresh.empty()) pixel = fresh[0].bbox.center();
        }
        out.target_position = pixel_to_world(view, pixel);
        return out;
      }
      case ProviderResponse::Kind::Reject:
      case ProviderResponse::Kind::Leave:
        return out;
      case ProviderResponse::Kind::Act: {
        if (out.actions_used >= cfg.max_actions) {
          // budget spent: the candidate stands iff detection persists here
          if (cfg.redetect) {
            const std::vector<Detection> fresh = cfg.redetect(virt);
            if (!fresh.empty()) {
              out.confirmed = true;
              out.target_position = pixel_to_world(view, fresh[0].bbox.center());
            }
          }
          return out;
        }
        virt = project_action(virt, resp.action);
        ++out.actions_used;
        break;
      }
    }
  }
}

}  // namespace gsnav
