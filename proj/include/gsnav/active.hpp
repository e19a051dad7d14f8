#pragma once

#include <optional>
#include <vector>

#include "gsnav/splat.hpp"

namespace gsnav {

// Per-view intrinsics for a multi-view panorama: fx = fy = W / (2 tan(hfov/2))
// with cx = cy = W/2; the image height follows from the vertical fov through
// the analogous relation.
CameraIntrinsics panorama_intrinsics(int per_view_width, double hfov_deg,
                                     double vfov_deg);

struct PanoramaConfig {
  int view_width = 120;
  int view_height = 150;
  double hfov_deg = 120.0;
};

// Horizontal concatenation of 360/hfov perspective views at a fixed position.
// Per-view principal points are centered, so pitch spans symmetrically and
// the per-view yaw intervals tile [-180, 180) exactly at pixel edges.
struct PanoramaField {
  ImageD opacity;  // 1ch, view_height x (view_count * view_width)
  ImageD depth;
  int view_count = 0;
  int view_width = 0, view_height = 0;
  double hfov_deg = 0;
  double vfov_deg = 0;  // effective symmetric pitch extent
  double fx = 0, fy = 0, cx = 0, cy = 0;  // per-view

  double yaw_of_view(int v) const {
    return -180.0 + hfov_deg / 2.0 + v * hfov_deg;
  }
  struct Angles {
    double pitch_deg, yaw_deg;
  };
  Angles angle_of_pixel(int x, int y) const;
};

PanoramaField render_panorama(const GaussianMap& map, const Vec3& center,
                              const PanoramaConfig& cfg = {});

struct ActivePerceptionConfig {
  double tau = 0.3;           // opacity threshold for "unobserved"
  double dbscan_eps_deg = 6.0;
  int dbscan_min_pts = 8;
};

struct ViewTarget {
  double pitch_deg = 0;
  double yaw_deg = 0;
};

// Density clustering over angular points; yaw wraps at +-180. Returns one
// label per point, -1 for noise, labels assigned in scan order.
std::vector<int> dbscan_angles(const std::vector<Vec2>& pitch_yaw_deg,
                               double eps_deg, int min_pts);

// Centroid of the largest cluster of low-opacity pixels (circular mean in
// yaw); nullopt when nothing falls below tau or all points are noise.
std::optional<ViewTarget> select_active_viewpoint(
    const PanoramaField& pano, const ActivePerceptionConfig& cfg = {});

}  // namespace gsnav
