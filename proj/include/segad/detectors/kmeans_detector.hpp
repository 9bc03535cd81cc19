#pragma once

#include <cstdint>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"

namespace segad::detectors {

struct KMeansDetectorParams {
  std::size_t k = 8;
  bool standardize = true;
  std::size_t max_iter = 300;
};

struct KMeansDetector {
  ColumnScaler scaler;  // identity when not standardizing
  Matrix centroids;
  friend bool operator==(const KMeansDetector&, const KMeansDetector&) = default;
};

// k above the number of distinct rows is clamped with a warning.
KMeansDetector train_kmeans_detector(const Matrix& x, const KMeansDetectorParams& params,
                                     std::uint64_t seed, Diagnostics* diag = nullptr);

// Euclidean distance to the nearest centroid.
std::vector<double> score_kmeans_distance(const KMeansDetector& model, const Matrix& x);

}  // namespace segad::detectors
