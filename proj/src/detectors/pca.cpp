#include "segad/detectors/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "segad/common/error.hpp"

namespace segad::detectors {

PcaModel fit_pca(const Matrix& x, const PcaParams& params, Diagnostics* diag) {
  if (!(params.variance_keep > 0.0 && params.variance_keep <= 1.0))
    throw RejectedInput("pca: variance_keep must lie in (0, 1]");
  const std::size_t n = x.rows();
  if (n < 2) throw RejectedInput("pca: need at least two training rows");

  PcaModel m;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= static_cast<double>(n);
    if (!std::isfinite(mean) || !std::isfinite(var)) throw RejectedInput("pca: non-finite training value");
    if (var <= 0.0) {
      warn(diag, "pca: dropped zero-variance column " + std::to_string(c));
      continue;
    }
    m.kept_columns.push_back(c);
    m.mean.push_back(mean);
    m.scale.push_back(params.standardize ? std::sqrt(var) : 1.0);
  }
  const std::size_t d = m.kept_columns.size();
  if (d == 0) throw RejectedInput("pca: every column has zero variance");

  Eigen::MatrixXd z(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j)
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = (x(r, m.kept_columns[j]) - m.mean[j]) / m.scale[j];
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw ConvergenceFailure("pca: eigendecomposition failed", 0.0);

  // Eigen returns ascending order.
  const auto di = static_cast<Eigen::Index>(d);
  double total = 0.0;
  for (Eigen::Index k = di - 1; k >= 0; --k) {
    const double ev = std::max(eig.eigenvalues()(k), 0.0);
    m.eigenvalues.push_back(ev);
    total += ev;
  }
  std::size_t keep = d;
  double cum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    cum += m.eigenvalues[k];
    if (cum >= (params.variance_keep - 1e-12) * total) {
      keep = k + 1;
      break;
    }
  }
  if (params.variance_keep >= 1.0) keep = d;
  m.explained = 0.0;
  for (std::size_t k = 0; k < keep; ++k) m.explained += m.eigenvalues[k];
  m.explained = total > 0.0 ? m.explained / total : 1.0;

  m.components = Matrix(keep, d);
  for (std::size_t k = 0; k < keep; ++k) {
    const auto col = eig.eigenvectors().col(di - 1 - static_cast<Eigen::Index>(k));
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    const double sign = col(arg) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) m.components(k, j) = sign * col(static_cast<Eigen::Index>(j));
  }
  return m;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  const std::size_t d = model.kept_columns.size();
  const std::size_t k = model.components.rows();
  Matrix out(x.rows(), k);
  std::vector<double> z(d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) z[j] = (x(r, model.kept_columns[j]) - model.mean[j]) / model.scale[j];
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += model.components(c, j) * z[j];
      out(r, c) = s;
    }
  }
  return out;
}

std::vector<double> score_pca_spe(const PcaModel& model, const Matrix& x) {
  const std::size_t d = model.kept_columns.size();
  const std::size_t k = model.components.rows();
  std::vector<double> out(x.rows());
  std::vector<double> z(d), proj(k);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) z[j] = (x(r, model.kept_columns[j]) - model.mean[j]) / model.scale[j];
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += model.components(c, j) * z[j];
      proj[c] = s;
    }
    double spe = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double rec = 0.0;
      for (std::size_t c = 0; c < k; ++c) rec += proj[c] * model.components(c, j);
      spe += (z[j] - rec) * (z[j] - rec);
    }
    out[r] = spe;
  }
  return out;
}

}  // namespace segad::detectors
