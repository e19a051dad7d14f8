#include "gsnav/active.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace gsnav {

CameraIntrinsics panorama_intrinsics(int per_view_width, double hfov_deg,
                                     double vfov_deg) {
  if (per_view_width < 1 || hfov_deg <= 0 || hfov_deg >= 180 || vfov_deg <= 0 ||
      vfov_deg >= 180)
    throw std::invalid_argument("panorama_intrinsics: bad fov or width");
  CameraIntrinsics k;
  k.fx = k.fy = per_view_width / (2.0 * std::tan(deg2rad(hfov_deg) / 2.0));
  k.cx = k.cy = per_view_width / 2.0;
  k.width = per_view_width;
  k.height = std::max(1, int(std::lround(2.0 * k.fy * std::tan(deg2rad(vfov_deg) / 2.0))));
  return k;
}

PanoramaField::Angles PanoramaField::angle_of_pixel(int x, int y) const {
  const int v = std::clamp(x / view_width, 0, view_count - 1);
  const double a = (x - v * view_width - cx) / fx;
  const double b = (y - cy) / fy;
  // column right of center looks clockwise (negative yaw offset)
  const double yaw = wrap_deg(yaw_of_view(v) - rad2deg(std::atan(a)));
  const double pitch = rad2deg(std::atan2(-b, std::sqrt(1.0 + a * a)));
  return {pitch, yaw};
}

PanoramaField render_panorama(const GaussianMap& map, const Vec3& center,
                              const PanoramaConfig& cfg) {
  if (cfg.hfov_deg <= 0 || std::fmod(360.0, cfg.hfov_deg) != 0.0)
    throw std::invalid_argument("render_panorama: hfov must divide 360");
  PanoramaField pano;
  pano.view_count = int(std::lround(360.0 / cfg.hfov_deg));
  pano.view_width = cfg.view_width;
  pano.view_height = cfg.view_height;
  pano.hfov_deg = cfg.hfov_deg;

  CameraIntrinsics k;
  k.width = cfg.view_width;
  k.height = cfg.view_height;
  k.fx = k.fy = cfg.view_width / (2.0 * std::tan(deg2rad(cfg.hfov_deg) / 2.0));
  k.cx = (cfg.view_width - 1) / 2.0;
  k.cy = (cfg.view_height - 1) / 2.0;
  pano.fx = k.fx;
  pano.fy = k.fy;
  pano.cx = k.cx;
  pano.cy = k.cy;
  pano.vfov_deg = 2.0 * rad2deg(std::atan((cfg.view_height / 2.0) / k.fy));

  const int wp = pano.view_count * cfg.view_width;
  pano.opacity = ImageD::zeros(wp, cfg.view_height, 1);
  pano.depth = ImageD::zeros(wp, cfg.view_height, 1);

  for (int v = 0; v < pano.view_count; ++v) {
    const Pose pose = pose_from_yaw_pitch(center, pano.yaw_of_view(v), 0.0);
    const RenderedView view = render(map, pose, k);
    for (int y = 0; y < cfg.view_height; ++y)
      for (int x = 0; x < cfg.view_width; ++x) {
        pano.opacity.at(v * cfg.view_width + x, y) = view.opacity.at(x, y);
        pano.depth.at(v * cfg.view_width + x, y) = view.depth.at(x, y);
      }
  }
  return pano;
}

namespace {

inline double angle_dist2(const Vec2& a, const Vec2& b) {
  const double dp = a.x() - b.x();
  const double dy = wrap_deg(a.y() - b.y());
  return dp * dp + dy * dy;
}

}  // namespace

std::vector<int> dbscan_angles(const std::vector<Vec2>& pts, double eps_deg,
                               int min_pts) {
  const int n = int(pts.size());
  std::vector<int> labels(n, -1);
  if (n == 0) return labels;

  // bucket grid keyed on (pitch, yaw) cells of size eps; yaw buckets wrap
  const double eps2 = eps_deg * eps_deg;
  const int yaw_buckets = std::max(1, int(std::floor(360.0 / eps_deg)));
  const double yaw_bucket_size = 360.0 / yaw_buckets;
  auto key = [&](const Vec2& p) {
    const int by = int(std::floor((p.y() + 180.0) / yaw_bucket_size)) % yaw_buckets;
    const int bp = int(std::floor((p.x() + 90.0) / eps_deg));
    return int64_t(bp) * 4096 + by;
  };
  std::unordered_map<int64_t, std::vector<int>> grid;
  for (int i = 0; i < n; ++i) grid[key(pts[i])].push_back(i);

  auto neighbors = [&](int i, std::vector<int>* out) {
    out->clear();
    const int bp0 = int(std::floor((pts[i].x() + 90.0) / eps_deg));
    const int by0 = int(std::floor((pts[i].y() + 180.0) / yaw_bucket_size));
    for (int dp = -1; dp <= 1; ++dp) {
      for (int dy = -1; dy <= 1; ++dy) {
        int by = (by0 + dy + yaw_buckets) % yaw_buckets;
        auto it = grid.find(int64_t(bp0 + dp) * 4096 + by);
        if (it == grid.end()) continue;
        for (int j : it->second)
          if (angle_dist2(pts[i], pts[j]) <= eps2) out->push_back(j);
      }
    }
  };

  // neighborhood counts include the query point itself
  int next_label = 0;
  std::vector<int> nb, nb2;
  std::vector<char> visited(n, 0);
  for (int i = 0; i < n; ++i) {
    if (visited[i]) continue;
    visited[i] = 1;
    neighbors(i, &nb);
    if (int(nb.size()) < min_pts) continue;  // noise unless claimed later
    const int label = next_label++;
    labels[i] = label;
    std::deque<int> queue(nb.begin(), nb.end());
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      if (labels[j] == -1) labels[j] = label;  // border point
      if (visited[j]) continue;
      visited[j] = 1;
      labels[j] = label;
      neighbors(j, &nb2);
      if (int(nb2.size()) >= min_pts)
        queue.insert(queue.end(), nb2.begin(), nb2.end());
    }
  }
  return labels;
}

std::optional<ViewTarget> select_active_viewpoint(
    const PanoramaField& pano, const ActivePerceptionConfig& cfg) {
  std::vector<Vec2> pts;
  const int wp = pano.view_count * pano.view_width;
  for (int y = 0; y < pano.view_height; ++y)
    for (int x = 0; x < wp; ++x)
      if (pano.opacity.at(x, y) < cfg.tau) {
        const auto a = pano.angle_of_pixel(x, y);
        pts.emplace_back(a.pitch_deg, a.yaw_deg);
      }
  if (pts.empty()) return std::nullopt;

  const std::vector<int> labels =
      dbscan_angles(pts, cfg.dbscan_eps_deg, cfg.dbscan_min_pts);
  int n_clusters = 0;
  for (int l : labels) n_clusters = std::max(n_clusters, l + 1);
  if (n_clusters == 0) return std::nullopt;

  std::vector<int> counts(n_clusters, 0);
  for (int l : labels)
    if (l >= 0) ++counts[l];
  const int best =
      int(std::max_element(counts.begin(), counts.end()) - counts.begin());

  double pitch_sum = 0, sin_sum = 0, cos_sum = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (labels[i] != best) continue;
    pitch_sum += pts[i].x();
    sin_sum += std::sin(deg2rad(pts[i].y()));
    cos_sum += std::cos(deg2rad(pts[i].y()));
  }
  ViewTarget t;
  t.pitch_deg = pitch_sum / counts[best];
  t.yaw_deg = rad2deg(std::atan2(sin_sum, cos_sum));
  return t;
}

}  // namespace gsnav
