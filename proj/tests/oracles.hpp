#pragma once

// Reference implementations for cross-checking library results. These are
// deliberately naive (quadratic scans, no heaps, no path reconstruction) and
// share no code with the library beyond the data types.

#include <cmath>
#include <limits>
#include <vector>

#include "gsnav/explore.hpp"
#include "gsnav/guidance.hpp"

namespace oracle {

using gsnav::Cell;
using gsnav::CellState;
using gsnav::ExploreMap;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Chessboard distance to the nearest obstacle, full O(cells^2) scan.
inline std::vector<int> chebyshev_brute(const ExploreMap& m) {
  std::vector<Cell> obstacles;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y) == CellState::Obstacle) obstacles.emplace_back(x, y);
  std::vector<int> out(size_t(m.width) * m.height, m.width + m.height);
  if (obstacles.empty()) return out;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      int best = std::numeric_limits<int>::max();
      for (const Cell& o : obstacles)
        best = std::min(best,
                        std::max(std::abs(o.x() - x), std::abs(o.y() - y)));
      out[size_t(y) * m.width + x] = best;
    }
  return out;
}

// Penalized shortest-path cost by settle-the-minimum scanning (no priority
// queue). The relaxation expression mirrors the cost recurrence
// cost(parent) + base_step + penalty(arrival) so agreement is exact.
inline double penalized_dijkstra_cost(const ExploreMap& m,
                                      const gsnav::DistanceField& df,
                                      const Cell& start, const Cell& goal,
                                      const gsnav::GuidanceConfig& cfg) {
  const int w = m.width, h = m.height;
  auto free_at = [&](int x, int y) {
    return x >= 0 && x < w && y >= 0 && y < h &&
           m.at(x, y) == CellState::Free;
  };
  if (!free_at(start.x(), start.y()) || !free_at(goal.x(), goal.y()))
    return kInf;
  auto penalty = [&](int x, int y) {
    const double d = df.at(x, y);
    return d >= cfg.safety_cells
               ? 0.0
               : cfg.omega * std::exp(2.0 * (cfg.safety_cells - d));
  };
  const double sqrt2 = std::sqrt(2.0);
  const size_t n = size_t(w) * h;
  std::vector<double> dist(n, kInf);
  std::vector<char> done(n, 0);
  dist[size_t(start.y()) * w + start.x()] = 0.0;
  for (size_t round = 0; round < n; ++round) {
    size_t u = n;
    double best = kInf;
    for (size_t i = 0; i < n; ++i)
      if (!done[i] && dist[i] < best) {
        best = dist[i];
        u = i;
      }
    if (u == n) break;
    done[u] = 1;
    const int x = int(u % w), y = int(u / w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!free_at(nx, ny)) continue;
        const double step =
            cfg.step_length * (dx != 0 && dy != 0 ? sqrt2 : 1.0);
        const double nd = dist[u] + step + penalty(nx, ny);
        const size_t v = size_t(ny) * w + nx;
        if (nd < dist[v]) dist[v] = nd;
      }
  }
  return dist[size_t(goal.y()) * w + goal.x()];
}

// Unpenalized 8-connected metric distance (cells; diagonals sqrt(2)).
inline double grid_dist8(const ExploreMap& m, const Cell& start,
                         const Cell& goal) {
  gsnav::GuidanceConfig cfg;
  cfg.step_length = 1.0;
  cfg.omega = 0.0;
  cfg.safety_cells = 0.0;
  gsnav::DistanceField df;
  df.width = m.width;
  df.height = m.height;
  df.dist.assign(size_t(m.width) * m.height, m.width + m.height);
  return penalized_dijkstra_cost(m, df, start, goal, cfg);
}

// Euclidean length of an 8-connected cell path, in cells.
inline double polyline_cells(const std::vector<Cell>& path) {
  double len = 0;
  for (size_t i = 1; i < path.size(); ++i) {
    const Cell d = path[i] - path[i - 1];
    len += std::hypot(double(d.x()), double(d.y()));
  }
  return len;
}

// Mean squared error -> peak signal-to-noise ratio, images in [0, 1].
inline double psnr(const gsnav::ImageD& a, const gsnav::ImageD& b) {
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= double(a.data.size());
  if (mse <= 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace oracle
