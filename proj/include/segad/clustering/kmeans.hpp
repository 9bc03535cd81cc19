#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segad/clustering/labeling.hpp"
#include "segad/common/matrix.hpp"
#include "segad/common/random.hpp"

namespace segad::clustering {

struct KMeansParams {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
};

struct KMeansResult {
  ClusterLabeling labeling;
  Matrix centroids;                       // k x d
  std::vector<double> objective_history;  // SSE after each assignment step
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Lloyd iterations from a k-means++ seeding. An emptied cluster keeps its
// previous centroid. Throws RejectedInput when k exceeds the number of
// distinct rows.
KMeansResult kmeans_fit(const Matrix& x, const KMeansParams& params);

// k-means++ seeding: first centre uniform, later ones proportional to D^2.
Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng);

std::size_t count_distinct_rows(const Matrix& x);

// Index of the nearest centroid; writes the squared distance when requested.
std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point,
                             double* squared = nullptr);

}  // namespace segad::clustering
