#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsnav/core.hpp"
#include "gsnav/image.hpp"

namespace gsnav {

struct GaussianPrimitive {
  Vec3 position{0, 0, 0};
  double opacity = 1.0;       // [0, 1]
  Vec3 color{1, 1, 1};        // rgb in [0, 1]
  Vec3 scale{0.01, 0.01, 0.01};
  Quat rotation{1, 0, 0, 0};

  bool valid() const {
    return opacity >= 0.0 && opacity <= 1.0 && scale.x() > 0 &&
           scale.y() > 0 && scale.z() > 0 && position.allFinite();
  }
  Mat3 covariance() const {  // R S S^T R^T
    Mat3 r = rotation.normalized().toRotationMatrix();
    Mat3 s = scale.asDiagonal();
    Mat3 rs = r * s;
    return rs * rs.transpose();
  }
};

// Revision increases on every mutation, so downstream caches can tell
// whether a map changed between calls.
class GaussianMap {
 public:
  size_t size() const { return primitives_.size(); }
  const GaussianPrimitive& at(size_t i) const { return primitives_[i]; }
  const std::vector<GaussianPrimitive>& primitives() const {
    return primitives_;
  }
  uint64_t revision() const { return revision_; }

  void add(const GaussianPrimitive& g) {
    if (!g.valid()) throw std::invalid_argument("invalid gaussian primitive");
    primitives_.push_back(g);
    ++revision_;
  }
  void set_color_opacity(size_t i, const Vec3& color, double opacity) {
    primitives_[i].color = color;
    primitives_[i].opacity = std::clamp(opacity, 0.0, 1.0);
    ++revision_;
  }
  void reserve(size_t n) { primitives_.reserve(n); }
  void clear() {
    primitives_.clear();
    ++revision_;
  }

 private:
  std::vector<GaussianPrimitive> primitives_;
  uint64_t revision_ = 0;
};

struct ProjectedSplat {
  Vec2 mean2d;
  Mat2 cov2d;
  double depth = 0;  // camera-frame z
};

// EWA-style perspective projection of one primitive. Returns nullopt when
// the primitive is culled (behind or on the near plane).
std::optional<ProjectedSplat> project_gaussian(const GaussianPrimitive& g,
                                               const Pose& pose,
                                               const CameraIntrinsics& k);

struct RenderOptions {
  double sigma_cutoff = 3.5;        // bbox radius in projected sigmas
  double alpha_min = 1e-5;          // skip weaker contributions
  double min_transmittance = 1e-4;  // transmittance clamped to 0 below this
};

struct RenderedView {
  ImageD color;    // 3ch, alpha-composited, background black
  ImageD depth;    // alpha-weighted camera z
  ImageD opacity;  // accumulated alpha in [0, 1]
  Pose pose;
  CameraIntrinsics intrinsics;

  // Depth with the unobserved remainder pushed to max_range, so empty or
  // thinly covered pixels do not read as nearby surfaces.
  double occlusion_depth(int x, int y, double max_range = kMaxRange) const {
    return depth.at(x, y) + (1.0 - opacity.at(x, y)) * max_range;
  }
};

// Front-to-back alpha compositing over the globally depth-sorted splat list.
RenderedView render(const GaussianMap& map, const Pose& pose,
                    const CameraIntrinsics& k, const RenderOptions& opt = {});

struct MutationSummary {
  int added = 0;
  int rejected = 0;
  uint64_t revision = 0;
};

// Back-projects every stride-th pixel with depth inside (near, max_range)
// into a new primitive; max_range itself is the sensor's no-return marker
// and is skipped. Sampling starts at stride/2, giving floor(W/stride) *
// floor(H/stride) samples on a fully valid frame. A positive dedup_voxel
// suppresses inserts into already occupied voxels (off by default).
MutationSummary integrate_observation(GaussianMap& map, const ImageD& rgb,
                                      const ImageD& depth, const Pose& pose,
                                      const CameraIntrinsics& k, int stride,
                                      double dedup_voxel = 0.0,
                                      double max_range = kMaxRange);

struct MapOptConfig {
  double ssim_mix = 0.2;      // photometric blend: mix*L2 + (1-mix)*(1-ssim)
  double photo_weight = 1.0;
  double depth_weight = 0.7;
  int iterations = 10;
  double step_size = 0.1;
};

// Photometric + depth loss of a rendered view against a reference frame.
double map_loss(const GaussianMap& map, const ImageD& rgb_gt,
                const ImageD& depth_gt, const Pose& pose,
                const CameraIntrinsics& k, const MapOptConfig& cfg);

// Gradient steps on color and opacity only (positions, scales and rotations
// stay frozen). Backtracking halves the step until the loss is non-increasing.
// Returns the final loss.
double refine_map(GaussianMap& map, const ImageD& rgb_gt,
                  const ImageD& depth_gt, const Pose& pose,
                  const CameraIntrinsics& k, const MapOptConfig& cfg);

// One primitive per line: x y z o r g b sx sy sz qw qx qy qz
void save_map(const GaussianMap& map, const std::string& path);
GaussianMap load_map(const std::string& path);

}  // namespace gsnav
