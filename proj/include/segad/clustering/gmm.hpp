#pragma once

#include <cstdint>
#include <vector>

#include "segad/clustering/labeling.hpp"
#include "segad/common/matrix.hpp"

namespace segad::clustering {

struct GmmParams {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t max_iter = 200;
  double reg = 1e-6;   // added to every covariance diagonal
  double tol = 1e-8;   // stop when the log-likelihood gain drops below tol
};

struct GmmResult {
  ClusterLabeling labeling;  // argmax responsibility
  std::vector<double> weights;
  Matrix means;                     // k x d
  std::vector<Matrix> covariances;  // k of d x d
  Matrix responsibilities;          // n x k
  // One entry per E-step: the log-likelihood with the ridge penalty
  // -reg/2 tr(cov^-1) per component, the quantity EM maximizes.
  std::vector<double> log_likelihood_history;
  bool converged = false;
};

// Full-covariance Gaussian mixture fitted by EM from a k-means++ seeding.
// Throws ConvergenceFailure when a covariance stays singular despite reg.
GmmResult gmm_fit(const Matrix& x, const GmmParams& params);

}  // namespace segad::clustering
