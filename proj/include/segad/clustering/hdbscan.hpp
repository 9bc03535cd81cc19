#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "segad/clustering/labeling.hpp"
#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"

namespace segad::clustering {

struct HdbscanParams {
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 0;  // 0: same as min_cluster_size
};

struct MstEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

// One row of the condensed tree: child is a point (< n) or a cluster (>= n).
struct CondensedEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t size = 0;
};

struct HdbscanResult {
  ClusterLabeling labeling;
  std::vector<double> stability;  // per output cluster label
  std::vector<MstEdge> mst;
  std::vector<double> core_distance;
  std::vector<CondensedEdge> condensed_tree;
};

// Distance to the k-th nearest other point (k clamped to n-1).
std::vector<double> core_distances(const Matrix& x, std::size_t k);

// Prim's algorithm over the implicit complete graph with weights
// max(core_a, core_b, d(a, b)).
std::vector<MstEdge> mutual_reachability_mst(const Matrix& x, std::span<const double> core);

// HDBSCAN: mutual reachability MST, single-linkage hierarchy, condensed tree
// at min_cluster_size, excess-of-mass selection. Points outside every
// selected cluster are noise. Fewer than min_cluster_size points yields all
// noise with a warning.
HdbscanResult hdbscan(const Matrix& x, const HdbscanParams& params, Diagnostics* diag = nullptr);

}  // namespace segad::clustering
