#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "segad/clustering/labeling.hpp"
#include "segad/common/matrix.hpp"

namespace segad::clustering {

struct OpticsParams {
  std::size_t min_pts = 5;
  double eps_max = std::numeric_limits<double>::infinity();
  double reach_threshold = 0.5;
};

struct OpticsResult {
  ClusterLabeling labeling;
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;   // per point; +inf where undefined
  std::vector<double> core_distance;  // per point; +inf for non-core points
};

// Distance to the min_pts-th nearest other point, +inf when that neighbour
// lies beyond eps_max (or does not exist).
std::vector<double> optics_core_distances(const Matrix& x, std::size_t min_pts, double eps_max);

// OPTICS ordering with clusters cut at reach_threshold: walking the ordering,
// a point whose reachability exceeds the threshold starts a new cluster if it
// is core at that radius and is noise otherwise; other points join the
// current cluster.
OpticsResult optics(const Matrix& x, const OpticsParams& params);

}  // namespace segad::clustering
