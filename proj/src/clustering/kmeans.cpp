#include "segad/clustering/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "segad/common/error.hpp"

namespace segad::clustering {

std::size_t count_distinct_rows(const Matrix& x) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = x.row(a), rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (less(idx[i - 1], idx[i])) ++distinct;
  return distinct;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point,
                             double* squared) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (squared) *squared = best_d;
  return best;
}

Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  auto first = x.row(pick(rng));
  std::copy(first.begin(), first.end(), centers.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), centers.row(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      while (d2[chosen] == 0.0 && chosen > 0) --chosen;
    }
    auto row = x.row(chosen);
    std::copy(row.begin(), row.end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(x.row(i), centers.row(c)));
  }
  return centers;
}

KMeansResult kmeans_fit(const Matrix& x, const KMeansParams& params) {
  if (params.k == 0) throw RejectedInput("kmeans: k must be >= 1");
  if (params.k > count_distinct_rows(x))
    throw RejectedInput("kmeans: k exceeds the number of distinct rows");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Rng rng(params.seed);
  KMeansResult res;
  res.centroids = kmeans_plus_plus(x, params.k, rng);

  std::vector<int> assign(n, -1);
  for (std::size_t it = 0; it < params.max_iter; ++it) {
    bool changed = false;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      const int c = static_cast<int>(nearest_centroid(res.centroids, x.row(i), &d2));
      sse += d2;
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    res.objective_history.push_back(sse);
    res.iterations = it + 1;
    if (!changed) {
      res.converged = true;
      break;
    }
    Matrix sums(params.k, d);
    std::vector<std::size_t> counts(params.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(static_cast<std::size_t>(assign[i]));
      auto r = x.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += r[j];
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t c = 0; c < params.k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j)
        res.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  res.objective = res.objective_history.back();
  res.labeling.labels = std::move(assign);
  res.labeling.k_effective = count_clusters(res.labeling.labels);
  res.labeling.algorithm = "kmeans";
  return res;
}

}  // namespace segad::clustering
