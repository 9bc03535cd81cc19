#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace segad::changepoint {

struct SdarParams {
  int order = 2;                 // AR order k (>= 0)
  double discount = 0.005;       // forgetting factor r in (0, 1)
  double variance_floor = 1e-9;  // lower bound on the predictive variance
};

// Sequentially discounting AR model. Each update scores the new observation
// under the Gaussian AR(k) predictive distribution fitted to the past, then
// folds the observation into the discounted moments and re-solves the
// Yule-Walker equations.
//
// The first max(k, 1) observations only seed the moments and score 0. Early
// updates use the rate max(r, 1/(t+1)) so the moments start as plain running
// averages instead of being biased toward the zero initial state.
class SdarModel {
 public:
  explicit SdarModel(SdarParams params = {});

  // Returns the outlier score -log p(x | past). Throws RejectedInput on a
  // non-finite x.
  double update(double x);

  bool warmed_up() const { return seen_ >= warmup_length(); }
  std::size_t warmup_length() const;
  std::size_t observations() const { return seen_; }

  double mean() const { return mean_; }
  double variance() const { return variance_; }
  std::span<const double> autocovariance() const { return autocov_; }
  std::span<const double> coefficients() const { return coef_; }
  const SdarParams& params() const { return params_; }

 private:
  double predict() const;
  void refit();

  SdarParams params_;
  std::size_t seen_ = 0;
  std::size_t scored_ = 0;
  double mean_ = 0.0;
  double variance_ = 0.0;
  std::vector<double> autocov_;  // C_0..C_k
  std::vector<double> coef_;     // a_1..a_k
  std::deque<double> history_;   // most recent first, at most k values
};

// Solves the Toeplitz system sum_j a_j C_|i-j| = C_i (i = 1..k) by the
// Levinson-Durbin recursion. Returns false (and zero coefficients) when the
// system is singular or not positive definite.
bool solve_yule_walker(std::span<const double> autocov, std::span<double> coef);

}  // namespace segad::changepoint
