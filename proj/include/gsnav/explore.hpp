#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsnav/splat.hpp"

namespace gsnav {

enum class CellState : uint8_t { Unknown = 0, Free = 1, Obstacle = 2 };

struct ExploreMap {
  int width = 0, height = 0;
  double resolution = 0.05;  // meters per cell
  Vec2 origin{0, 0};         // world position of the (0,0) cell corner
  std::vector<CellState> cells;

  static ExploreMap unknown(int w, int h, double res, const Vec2& origin);
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  CellState at(int x, int y) const { return cells[size_t(y) * width + x]; }
  CellState& at(int x, int y) { return cells[size_t(y) * width + x]; }
  Cell world_to_cell(const Vec2& p) const {
    return Cell(int(std::floor((p.x() - origin.x()) / resolution)),
                int(std::floor((p.y() - origin.y()) / resolution)));
  }
  Vec2 cell_center(const Cell& c) const {
    return origin + Vec2((c.x() + 0.5) * resolution, (c.y() + 0.5) * resolution);
  }
  size_t count(CellState s) const;
};

struct ExploreMapConfig {
  double floor_height = 0.0;
  double agent_height = 0.88;
  double resolution = 0.05;
  double tau = 0.3;                // opacity threshold for marking
  double slab_margin_low = 0.1;    // obstacle slab starts this far above floor
  double slab_margin_high = 0.5;   // and ends agent_height + this above floor
  double floor_band = 0.1;         // |z - floor| <= band marks free
  double bound_margin = 0.5;       // padding around the primitive bbox
  // Explicit grid bounds (world, min/max xy). Without them the grid is fitted
  // to the primitive bounding box.
  std::optional<std::pair<Vec2, Vec2>> bounds;
};

// Ternary occupancy from the splat map: a top-down orthographic opacity
// accumulation of the obstacle slab marks obstacles, floor-band primitives
// mark free space, and obstacle wins ties.
ExploreMap build_exploration_map(const GaussianMap& map,
                                 const ExploreMapConfig& cfg);

// Free cells 8-adjacent to unknown (out-of-bounds counts as unknown), then
// snapped within Chebyshev radius 2 to the nearest free cell that has no
// obstacle among its 8 neighbors. Deduplicated, scan order.
std::vector<Cell> extract_frontiers(const ExploreMap& m);

struct DistanceField {
  int width = 0, height = 0;
  std::vector<int> dist;  // Chebyshev cells to the nearest obstacle
  int at(int x, int y) const { return dist[size_t(y) * width + x]; }
};

// Exact chessboard distance to the nearest obstacle; obstacle cells are 0.
// Maps without obstacles read width + height everywhere.
DistanceField chebyshev_distance_field(const ExploreMap& m);

struct WatershedResult {
  std::vector<int> labels;  // basin id per cell, -1 outside free space
  int basin_count = 0;
};

// Basins of the negated distance field flooded from its plateau-merged local
// maxima (free-space 8-neighborhoods), deterministic processing order.
WatershedResult watershed_basins(const ExploreMap& m, const DistanceField& df);

struct FrontierCluster {
  int id = -1;
  std::vector<Cell> member_cells;
  Vec2 centroid{0, 0};     // world coords of the representative cell center
  Cell representative{0, 0};
};

// Groups frontier cells by watershed basin; clusters are ordered by centroid
// (lexicographic) and ids follow that order.
std::vector<FrontierCluster> cluster_frontiers(const ExploreMap& m,
                                               const std::vector<Cell>& frontiers);

// PGM (P5): 0 = unknown, 128 = free, 255 = obstacle; a sidecar text header
// <path>.meta stores resolution and origin.
void save_pgm(const ExploreMap& m, const std::string& path);
ExploreMap load_pgm(const std::string& path);

}  // namespace gsnav
