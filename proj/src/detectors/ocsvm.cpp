#include "segad/detectors/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <unordered_map>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/random.hpp"

namespace segad::detectors {

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

// Least-recently-used cache of kernel rows.
class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma, std::size_t capacity)
      : x_(x), gamma_(gamma), capacity_(std::max<std::size_t>(capacity, 2)) {}

  const std::vector<double>& row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->second;
    }
    if (index_.size() >= capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
    std::vector<double> values(x_.rows());
    for (std::size_t j = 0; j < x_.rows(); ++j) values[j] = j == i ? 1.0 : rbf(x_.row(i), x_.row(j), gamma_);
    order_.emplace_front(i, std::move(values));
    index_[i] = order_.begin();
    return order_.front().second;
  }

 private:
  const Matrix& x_;
  double gamma_;
  std::size_t capacity_;
  std::list<std::pair<std::size_t, std::vector<double>>> order_;
  std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator> index_;
};

// Mean written as base + mean offset so equal inputs give back the input.
double stable_mean(const std::vector<double>& v) {
  const double base = v.front();
  double s = 0.0;
  for (double x : v) s += x - base;
  return base + s / static_cast<double>(v.size());
}

}  // namespace

OneClassSvm train_ocsvm(const Matrix& x_in, const OneClassSvmParams& params, std::uint64_t seed,
                        Diagnostics* diag, OneClassSvmTrace* trace) {
  if (!(params.nu > 0.0 && params.nu <= 1.0)) throw RejectedInput("ocsvm: nu must lie in (0, 1]");
  if (x_in.rows() == 0 || x_in.cols() == 0) throw RejectedInput("ocsvm: empty training matrix");
  for (double v : x_in.data())
    if (!std::isfinite(v)) throw RejectedInput("ocsvm: non-finite training value");

  Matrix x = x_in;
  if (params.max_train > 0 && x_in.rows() > params.max_train) {
    Rng rng(derive_seed(seed, 0x5e1));
    std::vector<std::size_t> idx(x_in.rows());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < params.max_train; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(params.max_train);
    std::sort(idx.begin(), idx.end());
    warn(diag, "ocsvm: subsampled " + std::to_string(x_in.rows()) + " training rows to " +
                   std::to_string(params.max_train));
    x = x_in.select_rows(idx);
  }
  const std::size_t n = x.rows();

  OneClassSvm model;
  model.gamma = params.gamma;
  if (!(model.gamma > 0.0)) {
    const auto& v = x.data();
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double e : v) var += (e - mean) * (e - mean);
    var /= static_cast<double>(v.size());
    model.gamma = var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
  }

  // Feasible start: the first floor(nu n) multipliers at 1, the next one
  // takes the fractional remainder.
  std::vector<double> alpha(n, 0.0);
  const double total = params.nu * static_cast<double>(n);
  const auto full = static_cast<std::size_t>(std::floor(total));
  for (std::size_t i = 0; i < std::min(full, n); ++i) alpha[i] = 1.0;
  if (full < n) alpha[full] = total - static_cast<double>(full);

  const std::size_t capacity =
      static_cast<std::size_t>(params.cache_mb * 1024.0 * 1024.0 / (8.0 * static_cast<double>(n)));
  KernelCache cache(x, model.gamma, std::min(capacity, n));

  std::vector<double> grad(n, 0.0);  // Q alpha
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    const auto& q = cache.row(i);
    for (std::size_t j = 0; j < n; ++j) grad[j] += alpha[i] * q[j];
  }
  auto objective = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += alpha[i] * grad[i];
    return -0.5 * s;
  };

  const std::size_t max_iter = params.max_iter ? params.max_iter : std::max<std::size_t>(10'000'000, 100 * n);
  constexpr double kTau = 1e-12;
  OneClassSvmTrace local;
  std::size_t iter = 0;
  double gap = 0.0;
  for (;;) {
    // i: smallest gradient among multipliers that can grow; j: second-order
    // choice among multipliers that can shrink.
    std::size_t i = n;
    double g_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t)
      if (alpha[t] < 1.0 && grad[t] < g_min) {
        g_min = grad[t];
        i = t;
      }
    double g_max = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t)
      if (alpha[t] > 0.0) g_max = std::max(g_max, grad[t]);
    gap = (i == n) ? 0.0 : g_max - g_min;
    if (i == n || gap <= params.tolerance) break;
    if (iter >= max_iter) {
      throw ConvergenceFailure("ocsvm: no convergence after " + std::to_string(iter) +
                                   " iterations (KKT gap " + std::to_string(gap) + ")",
                               gap);
    }
    const auto& qi = cache.row(i);
    std::size_t j = n;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!(alpha[t] > 0.0)) continue;
      const double b = grad[t] - g_min;
      if (b <= 0.0) continue;
      double a = 2.0 - 2.0 * qi[t];
      if (a <= 0.0) a = kTau;
      const double score = b * b / a;
      if (score > best) {
        best = score;
        j = t;
      }
    }
    if (j == n) break;
    const auto& qj = cache.row(j);
    const auto& qi2 = cache.row(i);  // the j lookup may have evicted row i
    double quad = 2.0 - 2.0 * qi2[j];
    if (quad <= 0.0) quad = kTau;
    double step = (grad[j] - grad[i]) / quad;
    step = std::min({step, 1.0 - alpha[i], alpha[j]});
    alpha[i] += step;
    alpha[j] -= step;
    if (alpha[j] < 0.0) alpha[j] = 0.0;
    if (alpha[i] > 1.0) alpha[i] = 1.0;
    for (std::size_t t = 0; t < n; ++t) grad[t] += step * (qi2[t] - qj[t]);
    ++iter;
    if (iter % n == 0) local.dual_objective.push_back(objective());
  }
  local.dual_objective.push_back(objective());

  // Decision values recomputed the way scoring computes them, so training and
  // scoring agree bit for bit.
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0) sv.push_back(t);
  model.support = x.select_rows(sv);
  for (std::size_t t : sv) model.alpha.push_back(alpha[t]);
  model.rho = 0.0;
  const std::vector<double> f = ocsvm_decision(model, x);
  std::vector<double> free_vals;
  double ub = std::numeric_limits<double>::infinity(), lb = -ub;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] >= 1.0) lb = std::max(lb, f[t]);
    else if (alpha[t] <= 0.0) ub = std::min(ub, f[t]);
    else free_vals.push_back(f[t]);
  }
  if (!free_vals.empty()) model.rho = stable_mean(free_vals);
  else if (std::isfinite(ub) && std::isfinite(lb)) model.rho = lb + (ub - lb) / 2;
  else model.rho = std::isfinite(ub) ? ub : lb;

  local.iterations = iter;
  local.kkt_gap = gap;
  local.training_rows = n;
  local.bounded = static_cast<std::size_t>(std::count(alpha.begin(), alpha.end(), 1.0));
  if (trace) *trace = std::move(local);
  return model;
}

std::vector<double> ocsvm_decision(const OneClassSvm& model, const Matrix& x) {
  if (x.cols() != model.support.cols()) throw RejectedInput("ocsvm: column count mismatch");
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t r) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.alpha.size(); ++i)
      s += model.alpha[i] * rbf(model.support.row(i), x.row(r), model.gamma);
    out[r] = s - model.rho;
  });
  return out;
}

std::vector<double> score_ocsvm(const OneClassSvm& model, const Matrix& x) {
  auto f = ocsvm_decision(model, x);
  for (double& v : f) v = -v;
  return f;
}

}  // namespace segad::detectors
