#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segad/common/matrix.hpp"
#include "segad/detectors/tree.hpp"

namespace segad::detectors {

enum class ClassWeighting { none, balanced };

struct RandomForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t max_features = 0;  // 0: ceil(sqrt(d))
  std::size_t min_leaf = 1;
  ClassWeighting class_weighting = ClassWeighting::none;
  std::size_t max_bins = 256;
};

struct RandomForest {
  std::vector<Tree> trees;            // leaves hold the weighted class-1 fraction
  std::vector<double> importances;    // mean decrease in impurity, sums to 1

  friend bool operator==(const RandomForest&, const RandomForest&) = default;
};

// Bagged Gini trees, one bootstrap per tree from derive_seed(seed, tree).
// Balanced weighting gives class c the weight n / (2 n_c).
// Throws RejectedInput unless both classes are present.
RandomForest train_random_forest(const Matrix& x, std::span<const std::uint8_t> y,
                                 const RandomForestParams& params, std::uint64_t seed);

// Mean leaf value across trees. Throws RejectedInput for an empty forest.
std::vector<double> predict_proba(const RandomForest& forest, const Matrix& x);

struct GradientBoostingParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 4;
  std::size_t min_leaf = 5;
  double l2 = 1.0;
  double subsample = 1.0;  // fraction of rows drawn without replacement per round
  std::size_t max_bins = 256;
};

struct GradientBoosting {
  double base_margin = 0.0;  // log-odds of the training prevalence
  std::vector<Tree> trees;   // leaf values already scaled by the step size
  std::vector<double> loss_history;  // mean log-loss before round 1, then after each round
  std::vector<double> importances;   // total gain per feature, sums to 1 when any split exists

  friend bool operator==(const GradientBoosting&, const GradientBoosting&) = default;
};

// Newton-step boosting on the logistic loss. A round whose full step would
// raise the training loss is halved until it does not (down to a no-op), so
// loss_history never increases.
GradientBoosting train_gradient_boosting(const Matrix& x, std::span<const std::uint8_t> y,
                                         const GradientBoostingParams& params, std::uint64_t seed);

std::vector<double> predict_margin(const GradientBoosting& model, const Matrix& x);
std::vector<double> predict_proba(const GradientBoosting& model, const Matrix& x);

double sigmoid(double margin);

// Mean log-loss of probabilities p (clipped to [1e-15, 1 - 1e-15]).
double log_loss(std::span<const std::uint8_t> y, std::span<const double> p);

}  // namespace segad::detectors
