#pragma once

#include <array>
#include <vector>

#include "gsnav/guidance.hpp"
#include "gsnav/splat.hpp"

namespace gsnav {

struct ViewpointInitConfig {
  double alpha = 0.7;   // curvature vs distance blend
  double r_min = 1.0;   // candidate annulus around the frontier, meters
  double r_max = 4.0;
  double camera_height = 0.88;
};

// Menger curvature of three 2d points (4 * area / product of side lengths);
// zero for degenerate triangles.
double menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c);

// Scores trajectory nodes inside the annulus by blended normalized curvature
// and along-path distance from the frontier; falls back to the node nearest
// r_max when the annulus is empty. The pose faces the frontier, pitch 0.
Pose init_viewpoint(const GuidanceTrajectory& traj,
                    const FrontierCluster& frontier,
                    const ViewpointInitConfig& cfg);

struct LossWeights {
  double w_opa = 0.01;
  double w_vis = 1.0;
  double w_cos = 0.01;
  double w_traj = 0.1;
  double beta = 5.0;       // softmin temperature
  int iterations = 40;
  int ray_samples = 16;
  double step_size = 0.05;
  double fd_step = 1e-3;   // finite-difference step on pose tangent coords
  int render_width = 80;   // rendering resolution during optimization
  int render_height = 60;
  double render_hfov_deg = 90.0;
};

// Mean unobserved mass of a rendered view: E[1 - accumulated opacity].
double loss_opacity(const RenderedView& view);

struct OcclusionResult {
  double loss = 1.0;      // E[1 - Pr_v]
  double mean_prv = 0.0;  // E[sigmoid(rendered depth - sample depth)]
  bool behind_camera = false;
};

// Visibility probability along the camera->frontier segment, sampled at n
// evenly spaced points ending on the frontier. Pixels with accumulated
// opacity below one read the remainder at max_range (unobserved space does
// not occlude); off-frame samples do the same.
OcclusionResult occlusion_from_view(const RenderedView& view,
                                    const Vec3& frontier_world, int n_samples);
OcclusionResult loss_occlusion(const GaussianMap& map, const Pose& pose,
                               const CameraIntrinsics& k,
                               const Vec3& frontier_world, int n_samples);

// (1 - cos^2 angle(forward, to-frontier)) * mean_prv. Throws when the
// frontier coincides with the camera center.
double loss_alignment(const Pose& pose, const Vec3& frontier_world,
                      double mean_prv);

// Softmin trajectory attraction: -(1/beta) ln sum_i w exp(-beta d_i) with
// w = exp(-(1 - opacity_loss) * d_frontier / 2). The opacity loss enters as
// a detached scalar and contributes no gradient.
double loss_trajectory(const Vec3& pos, const std::vector<Vec3>& traj_points,
                       const Vec3& frontier_world,
                       double opacity_loss_detached, double beta);

// Softmax-weighted direction sum_i alpha_i (pos - p_i)/d_i with
// alpha_i = exp(-beta d_i) / sum_j exp(-beta d_j).
Vec3 trajectory_softmin_gradient(const Vec3& pos,
                                 const std::vector<Vec3>& traj_points,
                                 double beta);

// Full translation gradient of loss_trajectory (softmin part plus the
// frontier-distance weight term; the detached opacity loss stays a constant).
Vec3 trajectory_gradient(const Vec3& pos, const std::vector<Vec3>& traj_points,
                         const Vec3& frontier_world,
                         double opacity_loss_detached, double beta);

struct ViewpointLosses {
  double opa = 0, vis = 0, cos = 0, traj = 0, total = 0;
};

using Tangent6 = Eigen::Matrix<double, 6, 1>;

// Applies a step in the optimizer's pose parameterization: world translation
// in the first three coordinates, a camera-frame rotation vector in the last
// three.
Pose perturb_pose(const Pose& pose, const Tangent6& delta);

// Weighted loss terms at one pose.
ViewpointLosses composite_losses(const GaussianMap& map, const Pose& pose,
                                 const std::vector<Vec3>& traj_points,
                                 const Vec3& frontier_world,
                                 const LossWeights& weights);

struct CompositeEval {
  ViewpointLosses losses;
  Tangent6 gradient;  // rendered terms finite-differenced, rest analytic
};

// Loss and assembled tangent gradient, exactly as one optimizer iteration
// sees them.
CompositeEval composite_loss_gradient(const GaussianMap& map, const Pose& pose,
                                      const std::vector<Vec3>& traj_points,
                                      const Vec3& frontier_world,
                                      const LossWeights& weights);

struct ViewpointPose {
  Pose pose;
  ViewpointLosses losses;
  int iterations_run = 0;
};

// Gradient descent on the 6 pose tangent coordinates (world translation,
// camera-frame rotation). Rendered terms use central finite differences;
// alignment and trajectory terms use analytic gradients. Steps halve on
// non-decrease; the best pose seen is returned.
ViewpointPose optimize_viewpoint(const GaussianMap& map, const Pose& init,
                                 const std::vector<Vec3>& traj_points,
                                 const Vec3& frontier_world,
                                 const LossWeights& weights,
                                 std::vector<ViewpointLosses>* trace = nullptr);

// Trajectory cells lifted to a fixed height, for use as attractor points.
std::vector<Vec3> lift_trajectory(const GuidanceTrajectory& traj, double z);

}  // namespace gsnav
