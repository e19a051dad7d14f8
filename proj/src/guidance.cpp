#include "gsnav/guidance.hpp"

#include <cmath>
#include <limits>
#include <queue>

namespace gsnav {

double proximity_penalty(double d_cells, const GuidanceConfig& cfg) {
  if (d_cells >= cfg.safety_cells) return 0.0;
  return cfg.omega * std::exp(2.0 * (cfg.safety_cells - d_cells));
}

GuidanceTrajectory plan_guidance(const ExploreMap& m, const DistanceField& df,
                                 const Cell& start,
                                 const FrontierCluster& goal,
                                 const GuidanceConfig& cfg) {
  const int w = m.width, h = m.height;
  auto idx = [&](const Cell& c) { return size_t(c.y()) * w + c.x(); };
  auto is_free = [&](int x, int y) {
    return x >= 0 && x < w && y >= 0 && y < h && m.at(x, y) == CellState::Free;
  };
  if (!is_free(start.x(), start.y()))
    throw std::invalid_argument("plan_guidance: start cell is not free");
  const Cell target = goal.representative;
  if (!is_free(target.x(), target.y()))
    throw std::invalid_argument("plan_guidance: goal cell is not free");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(size_t(w) * h, inf);
  std::vector<int> parent(size_t(w) * h, -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
  dist[idx(start)] = 0.0;
  pq.push({0.0, int(idx(start))});

  const double sqrt2 = std::sqrt(2.0);
  while (!pq.empty()) {
    const auto [d, i] = pq.top();
    pq.pop();
    if (d > dist[i]) continue;
    if (i == int(idx(target))) break;
    const int x = i % w, y = i / w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!is_free(nx, ny)) continue;
        const size_t ni = size_t(ny) * w + nx;
        const double step = cfg.step_length * (dx != 0 && dy != 0 ? sqrt2 : 1.0);
        const double nd = d + step + proximity_penalty(df.at(nx, ny), cfg);
        if (nd < dist[ni]) {
          dist[ni] = nd;
          parent[ni] = i;
          pq.push({nd, int(ni)});
        }
      }
  }

  if (!std::isfinite(dist[idx(target)]))
    throw UnreachableError("plan_guidance: frontier not reachable");

  GuidanceTrajectory traj;
  traj.target_id = goal.id;
  std::vector<int> rev;
  for (int i = int(idx(target)); i != -1; i = parent[i]) rev.push_back(i);
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    const Cell c(*it % w, *it / w);
    traj.nodes.push_back(c);
    traj.costs.push_back(dist[*it]);
    traj.world.push_back(m.cell_center(c));
  }
  return traj;
}

}  // namespace gsnav
