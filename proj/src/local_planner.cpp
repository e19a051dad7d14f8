#include <algorithm>
#include <cmath>
#include <limits>

#include "gsnav/sim.hpp"

namespace gsnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// one upwind update of |grad T| = 1 at unit grid spacing
inline double eikonal_update(double ux, double uy) {
  const double lo = std::min(ux, uy);
  if (!std::isfinite(lo)) return kInf;
  const double hi = std::max(ux, uy);
  if (hi - lo >= 1.0 || !std::isfinite(hi)) return lo + 1.0;
  return (ux + uy + std::sqrt(2.0 - (ux - uy) * (ux - uy))) / 2.0;
}

}  // namespace

std::vector<Cell> plan_local(const ExploreMap& m, const Cell& start,
                             const Cell& goal, int clearance_cells) {
  if (!m.in_bounds(start.x(), start.y()) ||
      m.at(start.x(), start.y()) != CellState::Free)
    throw std::invalid_argument("plan_local: start is not a free cell");
  if (!m.in_bounds(goal.x(), goal.y()) ||
      m.at(goal.x(), goal.y()) != CellState::Free)
    throw UnreachableError("plan_local: goal is not a free cell");

  const int w = m.width, h = m.height;
  std::vector<uint8_t> open(size_t(w) * h, 0);
  {
    std::optional<DistanceField> df;
    if (clearance_cells > 0) df = chebyshev_distance_field(m);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        bool ok = m.at(x, y) == CellState::Free;
        if (ok && df && df->at(x, y) < clearance_cells) ok = false;
        open[size_t(y) * w + x] = ok ? 1 : 0;
      }
    // start and goal stay traversable regardless of clearance
    open[size_t(start.y()) * w + start.x()] = 1;
    open[size_t(goal.y()) * w + goal.x()] = 1;
  }

  std::vector<double> t(size_t(w) * h, kInf);
  auto T = [&](int x, int y) -> double& { return t[size_t(y) * w + x]; };
  T(goal.x(), goal.y()) = 0.0;

  // fast sweeping: alternating sweep orders until no cell improves. The
  // upwind update alone cannot cross a diagonal squeeze between two free
  // cells, so diagonal arrivals relax alongside it (grid motion here is
  // 8-connected everywhere, sqrt(2) per diagonal step).
  const double sqrt2 = std::sqrt(2.0);
  const int max_passes = std::max(16, 4 * (w + h));
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    const int sx = (pass & 1) ? -1 : 1;
    const int sy = (pass & 2) ? -1 : 1;
    for (int yi = 0; yi < h; ++yi) {
      const int y = sy > 0 ? yi : h - 1 - yi;
      for (int xi = 0; xi < w; ++xi) {
        const int x = sx > 0 ? xi : w - 1 - xi;
        if (!open[size_t(y) * w + x] || (x == goal.x() && y == goal.y()))
          continue;
        const double ux = std::min(x > 0 ? T(x - 1, y) : kInf,
                                   x + 1 < w ? T(x + 1, y) : kInf);
        const double uy = std::min(y > 0 ? T(x, y - 1) : kInf,
                                   y + 1 < h ? T(x, y + 1) : kInf);
        double cand = eikonal_update(ux, uy);
        for (int dy = -1; dy <= 1; dy += 2)
          for (int dx = -1; dx <= 1; dx += 2) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            cand = std::min(cand, T(nx, ny) + sqrt2);
          }
        if (cand < T(x, y) - 1e-12) {
          T(x, y) = cand;
          changed = true;
        }
      }
    }
    if (pass >= 3 && !changed) break;
  }

  if (!std::isfinite(T(start.x(), start.y())))
    throw UnreachableError("plan_local: goal not reachable from start");

  // steepest descent on the arrival-time field
  std::vector<Cell> path{start};
  Cell cur = start;
  auto at_goal = [&] { return cur.x() == goal.x() && cur.y() == goal.y(); };
  const size_t guard = size_t(w) * h + 2;
  while (!at_goal() && path.size() < guard) {
    int bx = cur.x(), by = cur.y();
    double best_t = T(cur.x(), cur.y());
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = cur.x() + dx, ny = cur.y() + dy;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        if (!open[size_t(ny) * w + nx]) continue;
        if (T(nx, ny) < best_t) {
          best_t = T(nx, ny);
          bx = nx;
          by = ny;
        }
      }
    if (bx == cur.x() && by == cur.y())
      throw UnreachableError("plan_local: descent stalled");
    cur = Cell(bx, by);
    path.push_back(cur);
  }
  if (!at_goal()) throw UnreachableError("plan_local: descent diverged");
  return path;
}

}  // namespace gsnav
