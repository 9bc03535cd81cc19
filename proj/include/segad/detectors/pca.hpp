#pragma once

#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"

namespace segad::detectors {

struct PcaParams {
  double variance_keep = 0.95;
  bool standardize = true;
};

struct PcaModel {
  std::vector<std::size_t> kept_columns;  // training columns with non-zero variance
  std::vector<double> mean;               // per kept column
  std::vector<double> scale;              // per kept column (1 when not standardizing)
  Matrix components;                      // m x d', rows are unit eigenvectors
  std::vector<double> eigenvalues;        // all d', decreasing
  double explained = 0.0;                 // variance fraction of the kept components
  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

// Keeps the fewest leading components whose eigenvalues reach variance_keep
// of the total. Zero-variance columns are dropped with a warning.
PcaModel fit_pca(const Matrix& x, const PcaParams& params, Diagnostics* diag = nullptr);

// Coordinates on the kept components (n x m).
Matrix pca_transform(const PcaModel& model, const Matrix& x);

// Squared reconstruction error of each row in the (standardized) space.
std::vector<double> score_pca_spe(const PcaModel& model, const Matrix& x);

}  // namespace segad::detectors
