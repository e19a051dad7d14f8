#pragma once

#include <vector>

#include "gsnav/explore.hpp"

namespace gsnav {

struct GuidanceConfig {
  double step_length = 4.0;   // per-move base cost
  double safety_cells = 10.0; // penalty activates below this obstacle distance
  double omega = 5.0;         // penalty gain
};

// omega * exp(2 * (safety - d)) for d < safety, zero otherwise; d in cells.
double proximity_penalty(double d_cells, const GuidanceConfig& cfg);

struct GuidanceTrajectory {
  std::vector<Cell> nodes;     // start .. frontier representative
  std::vector<double> costs;   // accumulated cost at each node, costs[0] = 0
  std::vector<Vec2> world;     // node centers in world coords
  int target_id = -1;
  double total_cost() const { return costs.empty() ? 0.0 : costs.back(); }
};

// Dijkstra over free cells (8-connected, sqrt(2) scaling of the base cost on
// diagonals, penalty unscaled). Ties resolve by cell scan order. Throws
// UnreachableError when no free path exists.
GuidanceTrajectory plan_guidance(const ExploreMap& m, const DistanceField& df,
                                 const Cell& start,
                                 const FrontierCluster& goal,
                                 const GuidanceConfig& cfg);

}  // namespace gsnav
