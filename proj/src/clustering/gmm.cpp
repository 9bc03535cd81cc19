#include "segad/clustering/gmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>

#include "segad/clustering/kmeans.hpp"
#include "segad/common/error.hpp"
#include "segad/common/random.hpp"

namespace segad::clustering {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Component {
  VectorXd mean;
  MatrixXd cov;
  Eigen::LLT<MatrixXd> chol;
  double log_norm = 0.0;  // -0.5 * (d log 2pi + log det) - 0.5 reg tr(cov^-1)
};

// The ridge makes the covariance update S + reg I, which is the exact M-step
// for component densities carrying an extra factor exp(-reg/2 tr(cov^-1)).
// Folding that factor into the normalizer keeps EM monotone in the objective
// it reports.
void factorize(Component& c, std::size_t comp, double reg) {
  c.chol.compute(c.cov);
  if (c.chol.info() != Eigen::Success)
    throw ConvergenceFailure("gmm: covariance of component " + std::to_string(comp) +
                                 " is not positive definite despite regularization",
                             0.0);
  const MatrixXd l = c.chol.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  if (!std::isfinite(log_det))
    throw ConvergenceFailure("gmm: degenerate covariance in component " + std::to_string(comp),
                             0.0);
  const MatrixXd l_inv = c.chol.matrixL().solve(MatrixXd::Identity(l.rows(), l.cols()));
  c.log_norm = -0.5 * (static_cast<double>(c.mean.size()) * std::log(2.0 * std::numbers::pi) +
                       log_det) -
               0.5 * reg * l_inv.squaredNorm();
}

double log_density(const Component& c, const VectorXd& x) {
  const VectorXd z = c.chol.matrixL().solve(x - c.mean);
  return c.log_norm - 0.5 * z.squaredNorm();
}

}  // namespace

GmmResult gmm_fit(const Matrix& x, const GmmParams& params) {
  if (params.k == 0) throw RejectedInput("gmm: k must be >= 1");
  if (!(params.reg > 0.0)) throw RejectedInput("gmm: reg must be > 0");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < params.k) throw RejectedInput("gmm: fewer rows than components");
  const std::size_t k = params.k;

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> data(
      x.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

  // Seed: k-means++ centres, shared data covariance, equal weights.
  Rng rng(params.seed);
  const Matrix seeds = kmeans_plus_plus(x, k, rng);
  const VectorXd grand = data.colwise().mean().transpose();
  const MatrixXd centered = data.rowwise() - grand.transpose();
  MatrixXd base_cov = (centered.transpose() * centered) / static_cast<double>(n);
  base_cov.diagonal().array() += params.reg;

  std::vector<Component> comps(k);
  std::vector<double> weights(k, 1.0 / static_cast<double>(k));
  for (std::size_t c = 0; c < k; ++c) {
    comps[c].mean = Eigen::Map<const VectorXd>(seeds.row(c).data(), static_cast<Eigen::Index>(d));
    comps[c].cov = base_cov;
    factorize(comps[c], c, params.reg);
  }

  GmmResult res;
  MatrixXd resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < params.max_iter; ++it) {
    // E-step
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const VectorXd xi = data.row(static_cast<Eigen::Index>(i)).transpose();
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double v = std::log(weights[c]) + log_density(comps[c], xi);
        resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        mx = std::max(mx, v);
      }
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        s += std::exp(resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) - mx);
      const double lse = mx + std::log(s);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) {
        auto& r = resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        r = std::exp(r - lse);
      }
    }
    res.log_likelihood_history.push_back(ll);
    if (it > 0 && ll - prev_ll < params.tol) {
      res.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step
    for (std::size_t c = 0; c < k; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      const double nk = resp.col(ci).sum();
      if (!(nk > 0.0))
        throw ConvergenceFailure("gmm: component " + std::to_string(c) + " lost all mass", 0.0);
      weights[c] = nk / static_cast<double>(n);
      comps[c].mean = (data.transpose() * resp.col(ci)) / nk;
      const MatrixXd diff = data.rowwise() - comps[c].mean.transpose();
      comps[c].cov = (diff.transpose() * diff.cwiseProduct(resp.col(ci).replicate(1, static_cast<Eigen::Index>(d)))) / nk;
      comps[c].cov.diagonal().array() += params.reg;
      factorize(comps[c], c, params.reg);
    }
  }

  res.weights = weights;
  res.means = Matrix(k, d);
  res.covariances.assign(k, Matrix(d, d));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      res.means(c, j) = comps[c].mean(static_cast<Eigen::Index>(j));
      for (std::size_t l = 0; l < d; ++l)
        res.covariances[c](j, l) = comps[c].cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
    }
  }
  res.responsibilities = Matrix(n, k);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 0; c < k; ++c) {
      res.responsibilities(i, c) = resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      if (res.responsibilities(i, c) > res.responsibilities(i, best)) best = c;
    }
    labels[i] = static_cast<int>(best);
  }
  res.labeling.labels = std::move(labels);
  res.labeling.k_effective = count_clusters(res.labeling.labels);
  res.labeling.algorithm = "gmm";
  return res;
}

}  // namespace segad::clustering
