#pragma once

#include <optional>
#include <span>

#include "segad/common/matrix.hpp"

namespace segad::clustering {

inline constexpr double kValidationEpsilon = 1e-12;

struct FlooredValue {
  double value = 0.0;
  bool capped = false;  // an epsilon floor was applied
};

// All indices ignore noise rows (label < 0) and return nullopt with fewer
// than two clusters.

// Mean of (b - a) / max(a, b); points in singleton clusters score 0.
std::optional<double> silhouette(const Matrix& x, std::span<const int> labels);

// [SSB / (k-1)] / [SSW / (n-k)], centroid-based, floored within term.
std::optional<FlooredValue> calinski_harabasz(const Matrix& x, std::span<const int> labels);

// (1/k) sum_i max_{j != i} (s_i + s_j) / d(c_i, c_j), s = mean distance to the
// centroid; centroid distances floored at epsilon.
std::optional<FlooredValue> davies_bouldin(const Matrix& x, std::span<const int> labels);

struct ClusterValidation {
  std::optional<double> silhouette;
  std::optional<double> calinski_harabasz;
  std::optional<double> davies_bouldin;
  bool ch_capped = false;
  bool db_capped = false;
};

ClusterValidation validate(const Matrix& x, std::span<const int> labels);

}  // namespace segad::clustering
