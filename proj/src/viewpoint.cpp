#include "gsnav/viewpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsnav {

double menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = (b - a).norm(), lb = (c - b).norm(), lc = (a - c).norm();
  if (la < 1e-12 || lb < 1e-12 || lc < 1e-12) return 0.0;
  const double cross =
      (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  return 2.0 * std::abs(cross) / (la * lb * lc);  // 4 * area / (la lb lc)
}

Pose init_viewpoint(const GuidanceTrajectory& traj,
                    const FrontierCluster& frontier,
                    const ViewpointInitConfig& cfg) {
  const auto& pts = traj.world;
  if (pts.empty()) throw std::invalid_argument("init_viewpoint: empty trajectory");
  const Vec2 f2 = frontier.centroid;
  const int n = int(pts.size());

  std::vector<double> to_frontier(n);
  for (int i = 0; i < n; ++i) to_frontier[i] = (pts[i] - f2).norm();

  // along-path distance from the frontier end
  std::vector<double> along(n, 0.0);
  for (int i = n - 2; i >= 0; --i)
    along[i] = along[i + 1] + (pts[i + 1] - pts[i]).norm();

  std::vector<int> cand;
  for (int i = 0; i < n; ++i)
    if (to_frontier[i] > cfg.r_min && to_frontier[i] <= cfg.r_max)
      cand.push_back(i);

  int chosen;
  if (cand.empty()) {
    chosen = 0;
    double best = std::abs(to_frontier[0] - cfg.r_max);
    for (int i = 1; i < n; ++i) {
      const double v = std::abs(to_frontier[i] - cfg.r_max);
      if (v < best) {
        best = v;
        chosen = i;
      }
    }
  } else {
    std::vector<double> curv(cand.size(), 0.0);
    for (size_t j = 0; j < cand.size(); ++j) {
      const int i = cand[j];
      if (i > 0 && i < n - 1)
        curv[j] = menger_curvature(pts[i - 1], pts[i], pts[i + 1]);
    }
    auto normalize = [](std::vector<double> v) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double range = *hi - *lo;
      for (double& x : v) x = range < 1e-12 ? 0.0 : (x - *lo) / range;
      return v;
    };
    // minmax_element needs stable copies
    std::vector<double> dists(cand.size());
    for (size_t j = 0; j < cand.size(); ++j) dists[j] = along[cand[j]];
    const std::vector<double> kn = normalize(curv);
    const std::vector<double> dn = normalize(dists);
    size_t best = 0;
    double best_score = -1;
    for (size_t j = 0; j < cand.size(); ++j) {
      const double score = cfg.alpha * kn[j] + (1 - cfg.alpha) * dn[j];
      if (score > best_score + 1e-12 ||
          (std::abs(score - best_score) <= 1e-12 && dn[j] > dn[best])) {
        best_score = score;
        best = j;
      }
    }
    chosen = cand[best];
  }

  const Vec2 p = pts[chosen];
  const Vec2 d = f2 - p;
  const double yaw = d.norm() < 1e-9 ? 0.0 : rad2deg(std::atan2(d.y(), d.x()));
  return pose_from_yaw_pitch(Vec3(p.x(), p.y(), cfg.camera_height), yaw, 0.0);
}

double loss_opacity(const RenderedView& view) {
  double sum = 0;
  for (double o : view.opacity.data) sum += 1.0 - o;
  return sum / double(view.opacity.data.size());
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

OcclusionResult occlusion_from_view(const RenderedView& view,
                                    const Vec3& frontier_world, int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("occlusion: n_samples >= 1");
  OcclusionResult out;
  const Vec3 f_cam = view.pose.to_camera(frontier_world);
  if (f_cam.z() <= kNearPlane) {
    out.behind_camera = true;
    return out;  // loss 1, mean 0
  }
  const CameraIntrinsics& k = view.intrinsics;
  // bilinear depth read: frontiers routinely project onto the exact pixel
  // center line (camera-height targets, pitch zero), where nearest-pixel
  // snapping would flip rows on fp-epsilon pose changes
  // every sample lies on the center->frontier ray, so they all land on the
  // frontier's pixel; if that pixel is outside the frame the camera images
  // none of the segment, and unseen cannot count as visible (a pose that
  // gazes away from the frontier must not score as unoccluded)
  const double u = k.fx * f_cam.x() / f_cam.z() + k.cx;
  const double v = k.fy * f_cam.y() / f_cam.z() + k.cy;
  if (u < 0 || v < 0 || u > k.width - 1 || v > k.height - 1)
    return out;  // loss 1, mean 0
  const int x0 = std::clamp(int(std::floor(u)), 0, std::max(k.width - 2, 0));
  const int y0 = std::clamp(int(std::floor(v)), 0, std::max(k.height - 2, 0));
  const int x1 = std::min(x0 + 1, k.width - 1);
  const int y1 = std::min(y0 + 1, k.height - 1);
  const double a = u - x0, b = v - y0;
  const double depth_read = (1 - a) * (1 - b) * view.occlusion_depth(x0, y0) +
                            a * (1 - b) * view.occlusion_depth(x1, y0) +
                            (1 - a) * b * view.occlusion_depth(x0, y1) +
                            a * b * view.occlusion_depth(x1, y1);
  double sum = 0;
  for (int j = 1; j <= n_samples; ++j) {
    const double t = double(j) / n_samples;  // last sample on the frontier
    sum += sigmoid(depth_read - t * f_cam.z());
  }
  out.mean_prv = sum / n_samples;
  out.loss = 1.0 - out.mean_prv;
  return out;
}

OcclusionResult loss_occlusion(const GaussianMap& map, const Pose& pose,
                               const CameraIntrinsics& k,
                               const Vec3& frontier_world, int n_samples) {
  return occlusion_from_view(render(map, pose, k), frontier_world, n_samples);
}

double loss_alignment(const Pose& pose, const Vec3& frontier_world,
                      double mean_prv) {
  const Vec3 c = pose.center();
  const Vec3 d = frontier_world - c;
  const double r = d.norm();
  if (r < 1e-9)
    throw std::invalid_argument("loss_alignment: frontier at camera center");
  const double cosv = pose.forward_world().dot(d / r);
  return (1.0 - cosv * cosv) * mean_prv;
}

double loss_trajectory(const Vec3& pos, const std::vector<Vec3>& traj_points,
                       const Vec3& frontier_world,
                       double opacity_loss_detached, double beta) {
  if (traj_points.empty())
    throw std::invalid_argument("loss_trajectory: empty trajectory");
  if (beta <= 0) throw std::invalid_argument("loss_trajectory: beta > 0");
  double dmin = std::numeric_limits<double>::max();
  for (const Vec3& p : traj_points) dmin = std::min(dmin, (pos - p).norm());
  double s = 0;
  for (const Vec3& p : traj_points)
    s += std::exp(-beta * ((pos - p).norm() - dmin));
  const double d_frontier = (pos - frontier_world).norm();
  const double log_w = -(1.0 - opacity_loss_detached) * d_frontier / 2.0;
  return -log_w / beta + dmin - std::log(s) / beta;
}

Vec3 trajectory_softmin_gradient(const Vec3& pos,
                                 const std::vector<Vec3>& traj_points,
                                 double beta) {
  double dmin = std::numeric_limits<double>::max();
  for (const Vec3& p : traj_points) dmin = std::min(dmin, (pos - p).norm());
  double s = 0;
  Vec3 g = Vec3::Zero();
  for (const Vec3& p : traj_points) {
    const Vec3 d = pos - p;
    const double dist = d.norm();
    const double a = std::exp(-beta * (dist - dmin));
    s += a;
    if (dist > 1e-12) g += a * d / dist;
  }
  return g / s;
}

Vec3 trajectory_gradient(const Vec3& pos, const std::vector<Vec3>& traj_points,
                         const Vec3& frontier_world,
                         double opacity_loss_detached, double beta) {
  Vec3 g = trajectory_softmin_gradient(pos, traj_points, beta);
  const Vec3 d = pos - frontier_world;
  const double dist = d.norm();
  if (dist > 1e-12)
    g += ((1.0 - opacity_loss_detached) / (2.0 * beta)) * d / dist;
  return g;
}

std::vector<Vec3> lift_trajectory(const GuidanceTrajectory& traj, double z) {
  std::vector<Vec3> out;
  out.reserve(traj.world.size());
  for (const Vec2& p : traj.world) out.emplace_back(p.x(), p.y(), z);
  return out;
}

namespace {

struct OptState {
  Mat3 r_wc;
  Vec3 center;

  Pose pose() const {
    Pose p;
    p.rotation = Quat(r_wc.transpose());
    p.rotation.normalize();
    p.translation = -(p.rotation * center);
    return p;
  }
  OptState perturbed(const Eigen::Matrix<double, 6, 1>& delta) const {
    OptState s;
    s.center = center + delta.head<3>();
    const Vec3 r = delta.tail<3>();
    const double angle = r.norm();
    Mat3 dr = Mat3::Identity();
    if (angle > 1e-15)
      dr = Eigen::AngleAxisd(angle, r / angle).toRotationMatrix();
    s.r_wc = r_wc * dr;
    // renormalize through the quaternion to keep the frame orthonormal
    Quat q(s.r_wc);
    q.normalize();
    s.r_wc = q.toRotationMatrix();
    return s;
  }
};

struct EvalResult {
  ViewpointLosses losses;
  double mean_prv = 0;
  double lopa_for_w = 1.0;
};

EvalResult eval_state(const GaussianMap& map, const CameraIntrinsics& k,
                      const LossWeights& w, const std::vector<Vec3>& traj_points,
                      const Vec3& frontier_world, const OptState& s) {
  const bool need_render = w.w_opa > 0 || w.w_vis > 0 || w.w_cos > 0;
  const bool have_traj = !traj_points.empty() && w.w_traj > 0;
  EvalResult r;
  const Pose pose = s.pose();
  if (need_render) {
    const RenderedView view = render(map, pose, k);
    r.losses.opa = loss_opacity(view);
    const OcclusionResult occ =
        occlusion_from_view(view, frontier_world, w.ray_samples);
    r.losses.vis = occ.loss;
    r.mean_prv = occ.mean_prv;
    r.lopa_for_w = r.losses.opa;
    // alignment has no defined direction when the frontier coincides with
    // the camera center; the term drops out, matching the gradient
    if (w.w_cos > 0 && (frontier_world - s.center).norm() > 1e-9)
      r.losses.cos = loss_alignment(pose, frontier_world, occ.mean_prv);
  }
  if (have_traj)
    r.losses.traj = loss_trajectory(s.center, traj_points, frontier_world,
                                    r.lopa_for_w, w.beta);
  r.losses.total = w.w_opa * r.losses.opa + w.w_vis * r.losses.vis +
                   w.w_cos * r.losses.cos + w.w_traj * r.losses.traj;
  return r;
}

// per-render scalars the loss terms consume; FD'd together so the probe
// discretization cancels between the vis term and its couplings
struct RenderedScalars {
  double lopa = 0;
  double lvis = 0;
};

RenderedScalars rendered_scalars(const GaussianMap& map,
                                 const CameraIntrinsics& k,
                                 const LossWeights& w,
                                 const Vec3& frontier_world, const OptState& s) {
  const RenderedView view = render(map, s.pose(), k);
  RenderedScalars r;
  r.lopa = loss_opacity(view);
  r.lvis = occlusion_from_view(view, frontier_world, w.ray_samples).loss;
  return r;
}

Tangent6 assemble_gradient(const GaussianMap& map, const CameraIntrinsics& k,
                           const LossWeights& w,
                           const std::vector<Vec3>& traj_points,
                           const Vec3& frontier_world, const OptState& state,
                           const EvalResult& cur) {
  Tangent6 grad = Tangent6::Zero();
  const bool need_render = w.w_opa > 0 || w.w_vis > 0 || w.w_cos > 0;
  const bool have_traj = !traj_points.empty() && w.w_traj > 0;

  const Vec3 dvec = frontier_world - state.center;
  const double r = dvec.norm();
  double cos0 = 0;
  if (w.w_cos > 0 && r > 1e-9)
    cos0 = state.pose().forward_world().dot(dvec / r);

  if (need_render) {
    // eval_state feeds the rendered opacity mean into the trajectory weight
    // and the visibility mean into the alignment term; their pose derivatives
    // come from the same central differences as the direct terms
    const double d_front = (state.center - frontier_world).norm();
    for (int j = 0; j < 6; ++j) {
      Tangent6 d = Tangent6::Zero();
      d[j] = w.fd_step;
      const RenderedScalars fp =
          rendered_scalars(map, k, w, frontier_world, state.perturbed(d));
      d[j] = -w.fd_step;
      const RenderedScalars fm =
          rendered_scalars(map, k, w, frontier_world, state.perturbed(d));
      const double dlopa = (fp.lopa - fm.lopa) / (2.0 * w.fd_step);
      const double dlvis = (fp.lvis - fm.lvis) / (2.0 * w.fd_step);
      grad[j] += w.w_opa * dlopa + w.w_vis * dlvis;
      if (w.w_cos > 0)  // mean_prv = 1 - lvis
        grad[j] += w.w_cos * (1.0 - cos0 * cos0) * (-dlvis);
      if (have_traj)
        grad[j] += w.w_traj * (-d_front / (2.0 * w.beta)) * dlopa;
    }
  }
  if (w.w_cos > 0 && r > 1e-9) {
    const Pose pose = state.pose();
    const Vec3 u = dvec / r;
    const Vec3 f = pose.forward_world();
    const double factor = w.w_cos * (-2.0 * cos0 * cur.mean_prv);
    grad.head<3>() += factor * ((u * u.transpose() - Mat3::Identity()) * f) / r;
    const Vec3 u_cam = pose.rotation * u;
    grad.tail<3>() += factor * Vec3(0, 0, 1).cross(u_cam);
  }
  if (have_traj)
    grad.head<3>() += w.w_traj * trajectory_gradient(state.center, traj_points,
                                                     frontier_world,
                                                     cur.lopa_for_w, w.beta);
  return grad;
}

OptState state_of(const Pose& pose) {
  OptState s;
  s.r_wc = pose.rotation.conjugate().toRotationMatrix();
  s.center = pose.center();
  return s;
}

}  // namespace

Pose perturb_pose(const Pose& pose, const Tangent6& delta) {
  return state_of(pose).perturbed(delta).pose();
}

ViewpointLosses composite_losses(const GaussianMap& map, const Pose& pose,
                                 const std::vector<Vec3>& traj_points,
                                 const Vec3& frontier_world,
                                 const LossWeights& weights) {
  const CameraIntrinsics k = make_intrinsics(
      weights.render_width, weights.render_height, weights.render_hfov_deg);
  return eval_state(map, k, weights, traj_points, frontier_world,
                    state_of(pose)).losses;
}

CompositeEval composite_loss_gradient(const GaussianMap& map, const Pose& pose,
                                      const std::vector<Vec3>& traj_points,
                                      const Vec3& frontier_world,
                                      const LossWeights& weights) {
  const CameraIntrinsics k = make_intrinsics(
      weights.render_width, weights.render_height, weights.render_hfov_deg);
  const OptState state = state_of(pose);
  const EvalResult cur =
      eval_state(map, k, weights, traj_points, frontier_world, state);
  CompositeEval out;
  out.losses = cur.losses;
  out.gradient = assemble_gradient(map, k, weights, traj_points, frontier_world,
                                   state, cur);
  return out;
}

ViewpointPose optimize_viewpoint(const GaussianMap& map, const Pose& init,
                                 const std::vector<Vec3>& traj_points,
                                 const Vec3& frontier_world,
                                 const LossWeights& w,
                                 std::vector<ViewpointLosses>* trace) {
  const CameraIntrinsics k =
      make_intrinsics(w.render_width, w.render_height, w.render_hfov_deg);

  OptState state = state_of(init);
  EvalResult cur = eval_state(map, k, w, traj_points, frontier_world, state);

  OptState best_state = state;
  EvalResult best = cur;

  // Accepted steps double the rate well past its seed value: occlusion flattens
  // to a plateau behind solid structure, and the residual trajectory pull is
  // weak, so a rate pinned at step_size cannot cross the plateau in 40 steps.
  const double lr_max = 32.0 * w.step_size;
  double lr = w.step_size;
  for (int iter = 0; iter < w.iterations; ++iter) {
    const Tangent6 grad =
        assemble_gradient(map, k, w, traj_points, frontier_world, state, cur);

    // backtracking on the live objective
    for (int halvings = 0; halvings <= 12; ++halvings) {
      const OptState cand = state.perturbed(-lr * grad);
      const EvalResult cr = eval_state(map, k, w, traj_points, frontier_world, cand);
      if (cr.losses.total <= cur.losses.total) {
        state = cand;
        cur = cr;
        lr = std::min(lr_max, lr * 2.0);
        break;
      }
      lr *= 0.5;
    }
    if (cur.losses.total < best.losses.total) {
      best = cur;
      best_state = state;
    }
    if (trace) trace->push_back(cur.losses);
  }

  ViewpointPose out;
  out.pose = best_state.pose();
  out.losses = best.losses;
  out.iterations_run = w.iterations;
  return out;
}

}  // namespace gsnav
