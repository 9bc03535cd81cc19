#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "segad/common/matrix.hpp"
#include "segad/common/random.hpp"

namespace segad::detectors {

// Per-feature quantized copy of a training matrix. A value maps to the number
// of boundaries strictly below it, so "code <= b" is the same test as
// "x <= boundaries[b]" on raw values.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::vector<std::vector<double>> boundaries;  // per feature, increasing
  std::vector<std::vector<std::uint8_t>> codes;  // per feature, per row

  std::size_t features() const { return boundaries.size(); }
};

// Boundaries are midpoints between consecutive distinct values; with more
// than max_bins distinct values they are taken at evenly spaced ranks.
// Throws RejectedInput on non-finite values or max_bins outside [2, 256].
BinnedMatrix bin_matrix(const Matrix& x, std::size_t max_bins = 256);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

enum class SplitCriterion {
  gini,    // a = class weight mass, b = mass of class 1; leaf = b / a
  newton,  // a = hessian, b = gradient; leaf = -b / (a + l2)
};

struct GrowParams {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  std::size_t max_features = 0;  // 0: every feature at every node
  double l2 = 1.0;
  double min_gain = 1e-12;
};

// Grows one tree over the listed rows. a, b and count are per-row statistics
// indexed by row number; count is the multiplicity used for min_leaf. When
// gains is given, each split's gain is added to gains[feature].
Tree grow_tree(const BinnedMatrix& bins, std::vector<std::size_t> rows, std::span<const double> a,
               std::span<const double> b, std::span<const double> count, SplitCriterion criterion,
               const GrowParams& params, Rng& rng, std::vector<double>* gains = nullptr);

}  // namespace segad::detectors
