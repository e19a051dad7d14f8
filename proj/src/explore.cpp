#include "gsnav/explore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>

namespace gsnav {

namespace {
constexpr int kNeighbors8[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                   {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
}

ExploreMap ExploreMap::unknown(int w, int h, double res, const Vec2& origin) {
  ExploreMap m;
  m.width = w;
  m.height = h;
  m.resolution = res;
  m.origin = origin;
  m.cells.assign(size_t(w) * h, CellState::Unknown);
  return m;
}

size_t ExploreMap::count(CellState s) const {
  size_t n = 0;
  for (CellState c : cells)
    if (c == s) ++n;
  return n;
}

ExploreMap build_exploration_map(const GaussianMap& map,
                                 const ExploreMapConfig& cfg) {
  if (cfg.resolution <= 0)
    throw std::invalid_argument("explore: resolution must be positive");

  Vec2 lo, hi;
  if (cfg.bounds) {
    lo = cfg.bounds->first;
    hi = cfg.bounds->second;
  } else if (map.size() == 0) {
    return ExploreMap::unknown(1, 1, cfg.resolution, Vec2(0, 0));
  } else {
    lo = Vec2(std::numeric_limits<double>::max(),
              std::numeric_limits<double>::max());
    hi = -lo;
    for (const auto& g : map.primitives()) {
      lo = lo.cwiseMin(Vec2(g.position.x(), g.position.y()));
      hi = hi.cwiseMax(Vec2(g.position.x(), g.position.y()));
    }
    lo -= Vec2(cfg.bound_margin, cfg.bound_margin);
    hi += Vec2(cfg.bound_margin, cfg.bound_margin);
  }
  const int w = std::max(1, int(std::ceil((hi.x() - lo.x()) / cfg.resolution)));
  const int h = std::max(1, int(std::ceil((hi.y() - lo.y()) / cfg.resolution)));
  ExploreMap m = ExploreMap::unknown(w, h, cfg.resolution, lo);

  const double slab_lo = cfg.floor_height + cfg.slab_margin_low;
  const double slab_hi = cfg.floor_height + cfg.agent_height + cfg.slab_margin_high;

  // top-down transparency accumulation; order independent for opacity
  std::vector<double> trans_obst(size_t(w) * h, 1.0);
  std::vector<double> trans_floor(size_t(w) * h, 1.0);
  const double cutoff2 = 3.0 * 3.0;

  auto splat_into = [&](std::vector<double>& trans, const GaussianPrimitive& g) {
    Mat3 cov = g.covariance();
    Mat2 c2;
    c2 << cov(0, 0) + 1e-10, cov(0, 1), cov(1, 0), cov(1, 1) + 1e-10;
    const double det = c2(0, 0) * c2(1, 1) - c2(0, 1) * c2(1, 0);
    if (det <= 0) return;
    Mat2 inv;
    inv << c2(1, 1) / det, -c2(0, 1) / det, -c2(1, 0) / det, c2(0, 0) / det;
    const double lmax = 0.5 * (c2(0, 0) + c2(1, 1)) +
                        std::sqrt(0.25 * (c2(0, 0) - c2(1, 1)) * (c2(0, 0) - c2(1, 1)) +
                                  c2(0, 1) * c2(0, 1));
    const double r = 3.0 * std::sqrt(std::max(lmax, 0.0));
    const Vec2 p(g.position.x(), g.position.y());
    const int x0 = std::max(0, int(std::floor((p.x() - r - lo.x()) / cfg.resolution)));
    const int x1 = std::min(w - 1, int(std::floor((p.x() + r - lo.x()) / cfg.resolution)));
    const int y0 = std::max(0, int(std::floor((p.y() - r - lo.y()) / cfg.resolution)));
    const int y1 = std::min(h - 1, int(std::floor((p.y() + r - lo.y()) / cfg.resolution)));
    for (int cy = y0; cy <= y1; ++cy)
      for (int cx = x0; cx <= x1; ++cx) {
        const Vec2 d = m.cell_center(Cell(cx, cy)) - p;
        const double q = inv(0, 0) * d.x() * d.x() + 2 * inv(0, 1) * d.x() * d.y() +
                         inv(1, 1) * d.y() * d.y();
        if (q > cutoff2) continue;
        const double sigma = std::min(g.opacity * std::exp(-0.5 * q), 0.999);
        trans[size_t(cy) * w + cx] *= (1.0 - sigma);
      }
  };

  for (const auto& g : map.primitives()) {
    const double z = g.position.z();
    if (z > slab_lo && z < slab_hi) splat_into(trans_obst, g);
    if (std::abs(z - cfg.floor_height) <= cfg.floor_band) splat_into(trans_floor, g);
  }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = size_t(y) * w + x;
      if (1.0 - trans_obst[i] >= cfg.tau)
        m.at(x, y) = CellState::Obstacle;  // obstacle wins ties
      else if (1.0 - trans_floor[i] >= cfg.tau)
        m.at(x, y) = CellState::Free;
    }
  return m;
}

std::vector<Cell> extract_frontiers(const ExploreMap& m) {
  auto state = [&](int x, int y) {
    return m.in_bounds(x, y) ? m.at(x, y) : CellState::Unknown;
  };
  auto obstacle_adjacent = [&](int x, int y) {
    for (const auto& d : kNeighbors8)
      if (state(x + d[0], y + d[1]) == CellState::Obstacle) return true;
    return false;
  };

  std::set<std::pair<int, int>> snapped;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(x, y) != CellState::Free) continue;
      bool frontier = false;
      for (const auto& d : kNeighbors8)
        if (state(x + d[0], y + d[1]) == CellState::Unknown) {
          frontier = true;
          break;
        }
      if (!frontier) continue;

      // snap to the euclidean-nearest non-obstacle-adjacent free cell within
      // radius 2; rings are scanned outward, and every radius-r candidate is
      // closer than any at radius r+1, so the first non-empty ring decides
      bool placed = false;
      for (int r = 0; r <= 2 && !placed; ++r) {
        int best_d2 = std::numeric_limits<int>::max();
        std::pair<int, int> best{0, 0};
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
            const int nx = x + dx, ny = y + dy;
            if (state(nx, ny) != CellState::Free) continue;
            if (obstacle_adjacent(nx, ny)) continue;
            const int d2 = dx * dx + dy * dy;
            if (d2 < best_d2) {
              best_d2 = d2;
              best = {nx, ny};
            }
          }
        }
        if (best_d2 != std::numeric_limits<int>::max()) {
          snapped.insert(best);
          placed = true;
        }
      }
      if (!placed) snapped.insert({x, y});  // no safe cell nearby, keep as is
    }
  }
  std::vector<Cell> out;
  out.reserve(snapped.size());
  for (const auto& [x, y] : snapped) out.emplace_back(x, y);
  return out;
}

DistanceField chebyshev_distance_field(const ExploreMap& m) {
  DistanceField df;
  df.width = m.width;
  df.height = m.height;
  const int cap = m.width + m.height;
  df.dist.assign(size_t(m.width) * m.height, cap);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y) == CellState::Obstacle) df.dist[size_t(y) * m.width + x] = 0;

  auto relax = [&](int x, int y, int nx, int ny) {
    if (nx < 0 || nx >= m.width || ny < 0 || ny >= m.height) return;
    int& d = df.dist[size_t(y) * m.width + x];
    d = std::min(d, df.dist[size_t(ny) * m.width + nx] + 1);
  };
  // two chamfer sweeps give the exact chessboard metric
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      relax(x, y, x - 1, y);
      relax(x, y, x - 1, y - 1);
      relax(x, y, x, y - 1);
      relax(x, y, x + 1, y - 1);
    }
  for (int y = m.height - 1; y >= 0; --y)
    for (int x = m.width - 1; x >= 0; --x) {
      relax(x, y, x + 1, y);
      relax(x, y, x + 1, y + 1);
      relax(x, y, x, y + 1);
      relax(x, y, x - 1, y + 1);
    }
  return df;
}

WatershedResult watershed_basins(const ExploreMap& m, const DistanceField& df) {
  const int w = m.width, h = m.height;
  WatershedResult out;
  out.labels.assign(size_t(w) * h, -1);

  auto is_free = [&](int x, int y) {
    return m.in_bounds(x, y) && m.at(x, y) == CellState::Free;
  };

  // plateau-merged local maxima of the distance field over free space
  std::vector<char> candidate(size_t(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!is_free(x, y)) continue;
      bool maximal = true;
      for (const auto& d : kNeighbors8) {
        const int nx = x + d[0], ny = y + d[1];
        if (is_free(nx, ny) && df.at(nx, ny) > df.at(x, y)) {
          maximal = false;
          break;
        }
      }
      candidate[size_t(y) * w + x] = maximal;
    }

  // flood equal-distance candidate plateaus into seed components
  int next = 0;
  std::vector<int> plateau(size_t(w) * h, -1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!candidate[size_t(y) * w + x] || plateau[size_t(y) * w + x] != -1)
        continue;
      const int label = next++;
      std::queue<Cell> q;
      q.push(Cell(x, y));
      plateau[size_t(y) * w + x] = label;
      while (!q.empty()) {
        const Cell c = q.front();
        q.pop();
        for (const auto& d : kNeighbors8) {
          const int nx = c.x() + d[0], ny = c.y() + d[1];
          if (!is_free(nx, ny) || plateau[size_t(ny) * w + nx] != -1) continue;
          if (!candidate[size_t(ny) * w + nx]) continue;
          if (df.at(nx, ny) != df.at(c.x(), c.y())) continue;
          plateau[size_t(ny) * w + nx] = label;
          q.push(Cell(nx, ny));
        }
      }
    }
  out.basin_count = next;

  // priority flood: higher distance first, then scan order
  using Entry = std::pair<int, int>;  // (-dist, cell index)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = size_t(y) * w + x;
      if (plateau[i] != -1) {
        out.labels[i] = plateau[i];
        pq.push({-df.at(x, y), int(i)});
      }
    }
  while (!pq.empty()) {
    const auto [negd, idx] = pq.top();
    pq.pop();
    const int x = idx % w, y = idx / w;
    for (const auto& d : kNeighbors8) {
      const int nx = x + d[0], ny = y + d[1];
      if (!is_free(nx, ny)) continue;
      const size_t ni = size_t(ny) * w + nx;
      if (out.labels[ni] != -1) continue;
      out.labels[ni] = out.labels[size_t(y) * w + x];
      pq.push({-df.at(nx, ny), int(ni)});
    }
  }
  return out;
}

std::vector<FrontierCluster> cluster_frontiers(
    const ExploreMap& m, const std::vector<Cell>& frontiers) {
  std::vector<FrontierCluster> out;
  if (frontiers.empty()) return out;

  const DistanceField df = chebyshev_distance_field(m);
  const WatershedResult ws = watershed_basins(m, df);

  std::vector<std::vector<Cell>> groups(ws.basin_count);
  for (const Cell& f : frontiers) {
    if (!m.in_bounds(f.x(), f.y())) continue;
    const int label = ws.labels[size_t(f.y()) * m.width + f.x()];
    if (label >= 0) groups[label].push_back(f);
  }

  for (auto& members : groups) {
    if (members.empty()) continue;
    FrontierCluster c;
    std::sort(members.begin(), members.end(), [](const Cell& a, const Cell& b) {
      return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    c.member_cells = members;

    Vec2 mean(0, 0);
    for (const Cell& cell : members) mean += m.cell_center(cell);
    mean /= double(members.size());

    // snap the centroid to the nearest free cell (world distance)
    const Cell start = m.world_to_cell(mean);
    Cell best(-1, -1);
    double best_d = std::numeric_limits<double>::max();
    const int rmax = std::max(m.width, m.height);
    for (int r = 0; r < rmax; ++r) {
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
          const int nx = start.x() + dx, ny = start.y() + dy;
          if (!m.in_bounds(nx, ny) || m.at(nx, ny) != CellState::Free) continue;
          const double d = (m.cell_center(Cell(nx, ny)) - mean).norm();
          if (d < best_d - 1e-12 ||
              (std::abs(d - best_d) <= 1e-12 &&
               (ny < best.y() || (ny == best.y() && nx < best.x())))) {
            best_d = d;
            best = Cell(nx, ny);
          }
        }
      if (best.x() >= 0 && r > int(best_d / m.resolution) + 1) break;
    }
    if (best.x() < 0) best = members.front();
    c.representative = best;
    c.centroid = m.cell_center(best);
    out.push_back(std::move(c));
  }

  std::sort(out.begin(), out.end(),
            [](const FrontierCluster& a, const FrontierCluster& b) {
              return a.centroid.x() != b.centroid.x()
                         ? a.centroid.x() < b.centroid.x()
                         : a.centroid.y() < b.centroid.y();
            });
  for (size_t i = 0; i < out.size(); ++i) out[i].id = int(i);
  return out;
}

void save_pgm(const ExploreMap& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << "P5\n" << m.width << " " << m.height << "\n255\n";
  std::vector<uint8_t> row(m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const CellState s = m.at(x, y);
      row[x] = s == CellState::Obstacle ? 255 : (s == CellState::Free ? 128 : 0);
    }
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  std::ofstream meta(path + ".meta");
  meta << "resolution " << m.resolution << "\n"
       << "origin " << m.origin.x() << " " << m.origin.y() << "\n";
}

ExploreMap load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  int w, h, maxval;
  f >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255)
    throw std::runtime_error("unsupported pgm: " + path);
  f.get();
  ExploreMap m = ExploreMap::unknown(w, h, 0.05, Vec2(0, 0));
  std::vector<uint8_t> buf(size_t(w) * h);
  f.read(reinterpret_cast<char*>(buf.data()), buf.size());
  for (size_t i = 0; i < buf.size(); ++i)
    m.cells[i] = buf[i] == 255 ? CellState::Obstacle
                               : (buf[i] == 128 ? CellState::Free
                                                : CellState::Unknown);
  std::ifstream meta(path + ".meta");
  if (meta) {
    std::string key;
    while (meta >> key) {
      if (key == "resolution") meta >> m.resolution;
      else if (key == "origin") meta >> m.origin.x() >> m.origin.y();
    }
  }
  return m;
}

}  // namespace gsnav
