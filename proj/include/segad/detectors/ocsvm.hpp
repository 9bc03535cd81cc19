#pragma once

#include <cstdint>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"

namespace segad::detectors {

struct OneClassSvmParams {
  double nu = 0.1;
  double gamma = 0.0;  // <= 0: 1 / (d * var(X)) over all entries
  double tolerance = 1e-4;
  std::size_t max_iter = 0;  // 0: max(10^7, 100 n)
  std::size_t max_train = 5000;  // larger inputs are subsampled uniformly
  double cache_mb = 200.0;
};

struct OneClassSvm {
  double gamma = 0.0;
  double rho = 0.0;
  Matrix support;              // rows with alpha > 0
  std::vector<double> alpha;   // per support row
  friend bool operator==(const OneClassSvm&, const OneClassSvm&) = default;
};

struct OneClassSvmTrace {
  std::size_t iterations = 0;
  double kkt_gap = 0.0;  // max violation at exit
  std::vector<double> dual_objective;  // -0.5 a'Qa after each sweep of n steps, then at exit
  std::size_t training_rows = 0;
  std::size_t bounded = 0;  // alpha at the upper bound
};

// nu-one-class SVM, dual scaled to 0 <= alpha_i <= 1, sum alpha = nu n, solved
// by maximal-violating-pair SMO with second-order working set selection.
// Throws ConvergenceFailure when max_iter passes without meeting tolerance.
OneClassSvm train_ocsvm(const Matrix& x, const OneClassSvmParams& params, std::uint64_t seed,
                        Diagnostics* diag = nullptr, OneClassSvmTrace* trace = nullptr);

// f(x) = sum alpha_i K(s_i, x) - rho.
std::vector<double> ocsvm_decision(const OneClassSvm& model, const Matrix& x);

// Anomaly score -f(x).
std::vector<double> score_ocsvm(const OneClassSvm& model, const Matrix& x);

}  // namespace segad::detectors
