#include "segad/clustering/optics.hpp"

#include <algorithm>
#include <cmath>

#include "segad/common/error.hpp"

namespace segad::clustering {

namespace {

std::vector<double> pairwise(const Matrix& x) {
  const std::size_t n = x.rows();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = euclidean_distance(x.row(i), x.row(j));
  return d;
}

std::vector<double> core_from(const std::vector<double>& dist, std::size_t n, std::size_t min_pts,
                              double eps_max) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> core(n, inf);
  if (min_pts == 0 || min_pts >= n) return core;
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist[i * n + j]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(min_pts - 1), row.end());
    const double c = row[min_pts - 1];
    core[i] = c <= eps_max ? c : inf;
  }
  return core;
}

}  // namespace

std::vector<double> optics_core_distances(const Matrix& x, std::size_t min_pts, double eps_max) {
  if (min_pts == 0) throw RejectedInput("optics: min_pts must be >= 1");
  return core_from(pairwise(x), x.rows(), min_pts, eps_max);
}

OpticsResult optics(const Matrix& x, const OpticsParams& params) {
  if (params.min_pts == 0) throw RejectedInput("optics: min_pts must be >= 1");
  const std::size_t n = x.rows();
  const double inf = std::numeric_limits<double>::infinity();
  const auto dist = pairwise(x);

  OpticsResult res;
  res.core_distance = core_from(dist, n, params.min_pts, params.eps_max);
  res.reachability.assign(n, inf);
  res.ordering.reserve(n);
  std::vector<char> done(n, 0);
  std::vector<char> seeded(n, 0);

  std::size_t next_fresh = 0;
  while (res.ordering.size() < n) {
    while (done[next_fresh]) ++next_fresh;
    std::size_t p = next_fresh;
    for (;;) {
      done[p] = 1;
      seeded[p] = 0;
      res.ordering.push_back(p);
      const double cp = res.core_distance[p];
      if (std::isfinite(cp)) {
        for (std::size_t q = 0; q < n; ++q) {
          if (done[q]) continue;
          const double d = dist[p * n + q];
          if (d > params.eps_max) continue;
          const double r = std::max(cp, d);
          if (r < res.reachability[q]) res.reachability[q] = r;
          seeded[q] = 1;
        }
      }
      // Seed with the smallest reachability; ties go to the lower index.
      std::size_t best = n;
      for (std::size_t q = 0; q < n; ++q)
        if (seeded[q] && (best == n || res.reachability[q] < res.reachability[best])) best = q;
      if (best == n) break;
      p = best;
    }
  }

  std::vector<int> labels(n, kNoise);
  int current = kNoise;
  int next_id = 0;
  for (std::size_t p : res.ordering) {
    if (!(res.reachability[p] <= params.reach_threshold)) {
      if (res.core_distance[p] <= params.reach_threshold) {
        current = next_id++;
        labels[p] = current;
      } else {
        current = kNoise;
      }
    } else {
      labels[p] = current;
    }
  }
  res.labeling = make_labeling(std::move(labels), "optics");
  return res;
}

}  // namespace segad::clustering
