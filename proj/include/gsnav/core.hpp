#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Cell = Eigen::Vector2i;

// World frame is z-up; camera frame is x-right, y-down, z-forward.
// Continuous pixel coordinates coincide with array indices (pixel centers
// at integer positions).
constexpr double kNearPlane = 0.01;  // meters
constexpr double kMaxRange = 10.0;   // meters

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

// Wrap an angle in degrees to [-180, 180).
inline double wrap_deg(double a) {
  a = std::fmod(a + 180.0, 360.0);
  if (a < 0) a += 360.0;
  return a - 180.0;
}

struct UnreachableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 &&
           cx < width && cy >= 0 && cy < height;
  }
};

// Pinhole intrinsics for a centered camera with the given horizontal fov.
inline CameraIntrinsics make_intrinsics(int width, int height,
                                        double hfov_deg) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = k.fy = width / (2.0 * std::tan(deg2rad(hfov_deg) / 2.0));
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  return k;
}

// Rigid world-to-camera transform: x_cam = rotation * x_world + translation.
struct Pose {
  Quat rotation{1, 0, 0, 0};
  Vec3 translation{0, 0, 0};

  Vec3 to_camera(const Vec3& p_world) const {
    return rotation * p_world + translation;
  }
  Vec3 to_world(const Vec3& p_cam) const {
    return rotation.conjugate() * (p_cam - translation);
  }
  Vec3 center() const { return to_world(Vec3::Zero()); }
  Vec3 forward_world() const { return rotation.conjugate() * Vec3(0, 0, 1); }
  double yaw_deg() const {
    Vec3 f = forward_world();
    return rad2deg(std::atan2(f.y(), f.x()));
  }
  double pitch_deg() const {
    Vec3 f = forward_world();
    return rad2deg(std::asin(std::clamp(f.z(), -1.0, 1.0)));
  }
};

// Camera at `position` with heading yaw (deg, 0 = +x, counterclockwise)
// and pitch (deg, positive looks up), zero roll.
inline Pose pose_from_yaw_pitch(const Vec3& position, double yaw_deg,
                                double pitch_deg) {
  const double cy = std::cos(deg2rad(yaw_deg)), sy = std::sin(deg2rad(yaw_deg));
  const double cp = std::cos(deg2rad(pitch_deg)),
               sp = std::sin(deg2rad(pitch_deg));
  Vec3 fwd(cp * cy, cp * sy, sp);
  Vec3 right(sy, -cy, 0);
  Vec3 down = fwd.cross(right);
  Mat3 r_wc;
  r_wc.col(0) = right;
  r_wc.col(1) = down;
  r_wc.col(2) = fwd;
  Pose p;
  p.rotation = Quat(r_wc.transpose());
  p.rotation.normalize();
  p.translation = -(p.rotation * position);
  return p;
}

// splitmix64; stable across platforms, unlike the std distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(next_u64() % uint64_t(hi - lo + 1));
  }
  bool bernoulli(double p) { return uniform() < p; }
  Rng fork(uint64_t stream) const {
    Rng r(state_ ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    return r;
  }

 private:
  uint64_t state_;
};

inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return z ^ (z >> 31);
}

}  // namespace gsnav
