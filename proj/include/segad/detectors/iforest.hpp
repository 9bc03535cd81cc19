#pragma once

#include <cstdint>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"

namespace segad::detectors {

struct IsolationForestParams {
  std::size_t n_trees = 100;
  std::size_t subsample_size = 256;
};

struct IsolationNode {
  int feature = -1;  // -1 marks an external node
  double split = 0.0;
  int left = -1;
  int right = -1;
  std::size_t size = 0;  // training points reaching an external node

  friend bool operator==(const IsolationNode&, const IsolationNode&) = default;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;
  friend bool operator==(const IsolationTree&, const IsolationTree&) = default;
};

struct IsolationForest {
  std::size_t subsample_size = 0;  // after clamping to n
  std::vector<IsolationTree> trees;
  friend bool operator==(const IsolationForest&, const IsolationForest&) = default;
};

// Average unsuccessful-search path length in a binary search tree of n
// points: 2 H(n-1) - 2 (n-1) / n, with c(0) = c(1) = 0 and c(2) = 1.
double average_path_length(std::size_t n);

// Path length of x in one tree, external nodes adjusted by c(size).
double path_length(const IsolationTree& tree, std::span<const double> x);

// A subsample_size above n is clamped to n with a warning.
IsolationForest train_isolation_forest(const Matrix& x, const IsolationForestParams& params,
                                       std::uint64_t seed, Diagnostics* diag = nullptr);

// s(x) = 2^(-E[h(x)] / c(psi)). With psi = 1 the normaliser c(1) = 0 is
// replaced by 1.
std::vector<double> score_iforest(const IsolationForest& forest, const Matrix& x);

}  // namespace segad::detectors
