#include "segad/changepoint/sdar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "segad/common/error.hpp"

namespace segad::changepoint {

bool solve_yule_walker(std::span<const double> autocov, std::span<double> coef) {
  const std::size_t k = coef.size();
  std::fill(coef.begin(), coef.end(), 0.0);
  if (k == 0) return true;
  const double c0 = autocov[0];
  if (!(c0 > 0.0) || !std::isfinite(c0)) return false;

  std::vector<double> a(k + 1, 0.0), prev(k + 1, 0.0);
  double err = c0;
  for (std::size_t m = 1; m <= k; ++m) {
    double acc = autocov[m];
    for (std::size_t j = 1; j < m; ++j) acc -= a[j] * autocov[m - j];
    const double kappa = acc / err;
    if (!std::isfinite(kappa) || std::abs(kappa) >= 1.0) {
      std::fill(coef.begin(), coef.end(), 0.0);
      return false;
    }
    prev = a;
    a[m] = kappa;
    for (std::size_t j = 1; j < m; ++j) a[j] = prev[j] - kappa * prev[m - j];
    err *= (1.0 - kappa * kappa);
    if (!(err > 0.0)) {
      std::fill(coef.begin(), coef.end(), 0.0);
      return false;
    }
  }
  for (std::size_t j = 0; j < k; ++j) coef[j] = a[j + 1];
  return true;
}

SdarModel::SdarModel(SdarParams params) : params_(params) {
  if (params_.order < 0) throw RejectedInput("SDAR order must be >= 0");
  if (!(params_.discount > 0.0 && params_.discount < 1.0))
    throw RejectedInput("SDAR discount must lie in (0, 1)");
  if (!(params_.variance_floor > 0.0)) throw RejectedInput("variance floor must be > 0");
  autocov_.assign(static_cast<std::size_t>(params_.order) + 1, 0.0);
  coef_.assign(static_cast<std::size_t>(params_.order), 0.0);
  variance_ = params_.variance_floor;
}

std::size_t SdarModel::warmup_length() const {
  return std::max<std::size_t>(static_cast<std::size_t>(params_.order), 1);
}

double SdarModel::predict() const {
  double pred = mean_;
  for (std::size_t j = 0; j < coef_.size(); ++j) pred += coef_[j] * (history_[j] - mean_);
  return pred;
}

void SdarModel::refit() { solve_yule_walker(autocov_, coef_); }

double SdarModel::update(double x) {
  if (!std::isfinite(x)) throw RejectedInput("SDAR input must be finite");
  const std::size_t t = seen_;
  const double rate = std::max(params_.discount, 1.0 / static_cast<double>(t + 1));

  double score = 0.0;
  double residual = 0.0;
  const bool scoring = t >= warmup_length();
  if (scoring) {
    residual = x - predict();
    score = 0.5 * std::log(2.0 * std::numbers::pi * variance_) +
            residual * residual / (2.0 * variance_);
  }

  // Incremental forms keep exact fixed points on constant input.
  mean_ += rate * (x - mean_);
  const double dx = x - mean_;
  autocov_[0] += rate * (dx * dx - autocov_[0]);
  for (std::size_t j = 1; j < autocov_.size() && j <= history_.size(); ++j)
    autocov_[j] += rate * (dx * (history_[j - 1] - mean_) - autocov_[j]);
  refit();

  if (scoring) {
    // The warm-up variance counts as one pseudo-observation.
    const double vrate =
        std::max(params_.discount, 1.0 / static_cast<double>(scored_ + 2));
    variance_ += vrate * (residual * residual - variance_);
    ++scored_;
  } else if (t + 1 == warmup_length()) {
    variance_ = autocov_[0];
  }
  variance_ = std::max(variance_, params_.variance_floor);

  if (!coef_.empty()) {
    history_.push_front(x);
    if (history_.size() > coef_.size()) history_.pop_back();
  }
  ++seen_;
  return score;
}

}  // namespace segad::changepoint
