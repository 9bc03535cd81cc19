#include "segad/detectors/kmeans_detector.hpp"

#include <cmath>

#include "segad/clustering/kmeans.hpp"
#include "segad/common/error.hpp"

namespace segad::detectors {

KMeansDetector train_kmeans_detector(const Matrix& x, const KMeansDetectorParams& params,
                                     std::uint64_t seed, Diagnostics* diag) {
  if (x.rows() == 0 || x.cols() == 0) throw RejectedInput("kmeans detector: empty training matrix");
  if (params.k == 0) throw RejectedInput("kmeans detector: k must be >= 1");
  KMeansDetector model;
  if (params.standardize) {
    model.scaler = ColumnScaler::fit(x);
  } else {
    model.scaler.mean.assign(x.cols(), 0.0);
    model.scaler.scale.assign(x.cols(), 1.0);
  }
  const Matrix z = model.scaler.transform(x);
  clustering::KMeansParams kp;
  kp.k = params.k;
  kp.seed = seed;
  kp.max_iter = params.max_iter;
  const std::size_t distinct = clustering::count_distinct_rows(z);
  if (kp.k > distinct) {
    warn(diag, "kmeans detector: k=" + std::to_string(kp.k) + " exceeds " + std::to_string(distinct) +
                   " distinct rows; clamped");
    kp.k = distinct;
  }
  model.centroids = clustering::kmeans_fit(z, kp).centroids;
  return model;
}

std::vector<double> score_kmeans_distance(const KMeansDetector& model, const Matrix& x) {
  if (x.cols() != model.centroids.cols()) throw RejectedInput("kmeans detector: column count mismatch");
  const Matrix z = model.scaler.transform(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double d2 = 0.0;
    clustering::nearest_centroid(model.centroids, z.row(r), &d2);
    out[r] = std::sqrt(d2);
  }
  return out;
}

}  // namespace segad::detectors
