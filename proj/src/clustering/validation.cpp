#include "segad/clustering/validation.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "segad/common/error.hpp"

namespace segad::clustering {

namespace {

// Non-noise rows with labels remapped to 0..k-1.
struct Clean {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> label;
  std::size_t k = 0;
};

Clean clean(const Matrix& x, std::span<const int> labels) {
  if (labels.size() != x.rows()) throw RejectedInput("validation: label count does not match rows");
  Clean c;
  std::map<int, std::size_t> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, fresh] = ids.try_emplace(labels[i], ids.size());
    c.rows.push_back(i);
    c.label.push_back(it->second);
  }
  c.k = ids.size();
  return c;
}

Matrix centroids(const Matrix& x, const Clean& c, std::vector<std::size_t>& counts) {
  Matrix cent(c.k, x.cols());
  counts.assign(c.k, 0);
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    auto r = x.row(c.rows[i]);
    auto dst = cent.row(c.label[i]);
    for (std::size_t j = 0; j < r.size(); ++j) dst[j] += r[j];
    ++counts[c.label[i]];
  }
  for (std::size_t k = 0; k < c.k; ++k)
    for (double& v : cent.row(k)) v /= static_cast<double>(counts[k]);
  return cent;
}

}  // namespace

std::optional<double> silhouette(const Matrix& x, std::span<const int> labels) {
  const Clean c = clean(x, labels);
  if (c.k < 2) return std::nullopt;
  const std::size_t m = c.rows.size();
  std::vector<std::size_t> counts(c.k, 0);
  for (std::size_t l : c.label) ++counts[l];
  std::vector<double> sums(c.k);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t own = c.label[i];
    if (counts[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) sums[c.label[j]] += euclidean_distance(x.row(c.rows[i]), x.row(c.rows[j]));
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.k; ++k)
      if (k != own) b = std::min(b, sums[k] / static_cast<double>(counts[k]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(m);
}

std::optional<FlooredValue> calinski_harabasz(const Matrix& x, std::span<const int> labels) {
  const Clean c = clean(x, labels);
  if (c.k < 2) return std::nullopt;
  const std::size_t m = c.rows.size();
  std::vector<std::size_t> counts;
  const Matrix cent = centroids(x, c, counts);
  std::vector<double> grand(x.cols(), 0.0);
  for (std::size_t r : c.rows)
    for (std::size_t j = 0; j < x.cols(); ++j) grand[j] += x(r, j);
  for (double& g : grand) g /= static_cast<double>(m);

  double ssb = 0.0, ssw = 0.0;
  for (std::size_t k = 0; k < c.k; ++k)
    ssb += static_cast<double>(counts[k]) * squared_distance(cent.row(k), grand);
  for (std::size_t i = 0; i < m; ++i) ssw += squared_distance(x.row(c.rows[i]), cent.row(c.label[i]));

  FlooredValue out;
  double within = m > c.k ? ssw / static_cast<double>(m - c.k) : 0.0;
  if (!(within >= kValidationEpsilon)) {
    within = kValidationEpsilon;
    out.capped = true;
  }
  out.value = (ssb / static_cast<double>(c.k - 1)) / within;
  return out;
}

std::optional<FlooredValue> davies_bouldin(const Matrix& x, std::span<const int> labels) {
  const Clean c = clean(x, labels);
  if (c.k < 2) return std::nullopt;
  std::vector<std::size_t> counts;
  const Matrix cent = centroids(x, c, counts);
  std::vector<double> spread(c.k, 0.0);
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    spread[c.label[i]] += euclidean_distance(x.row(c.rows[i]), cent.row(c.label[i]));
  for (std::size_t k = 0; k < c.k; ++k) spread[k] /= static_cast<double>(counts[k]);

  FlooredValue out;
  double total = 0.0;
  for (std::size_t i = 0; i < c.k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < c.k; ++j) {
      if (j == i) continue;
      double d = euclidean_distance(cent.row(i), cent.row(j));
      if (!(d >= kValidationEpsilon)) {
        d = kValidationEpsilon;
        out.capped = true;
      }
      worst = std::max(worst, (spread[i] + spread[j]) / d);
    }
    total += worst;
  }
  out.value = total / static_cast<double>(c.k);
  return out;
}

ClusterValidation validate(const Matrix& x, std::span<const int> labels) {
  ClusterValidation v;
  v.silhouette = silhouette(x, labels);
  if (auto ch = calinski_harabasz(x, labels)) {
    v.calinski_harabasz = ch->value;
    v.ch_capped = ch->capped;
  }
  if (auto db = davies_bouldin(x, labels)) {
    v.davies_bouldin = db->value;
    v.db_capped = db->capped;
  }
  return v;
}

}  // namespace segad::clustering
