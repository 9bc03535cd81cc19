#include "segad/detectors/forest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/random.hpp"

namespace segad::detectors {

namespace {

void check_labels(const Matrix& x, std::span<const std::uint8_t> y, const char* who) {
  if (x.rows() != y.size()) throw RejectedInput(std::string(who) + ": label count does not match rows");
  if (x.cols() == 0) throw RejectedInput(std::string(who) + ": no feature columns");
  std::size_t pos = 0;
  for (auto v : y) pos += v != 0;
  if (pos == 0 || pos == y.size())
    throw RejectedInput(std::string(who) + ": training labels contain a single class");
}

void normalize(std::vector<double>& v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s > 0.0)
    for (double& x : v) x /= s;
}

std::vector<double> predict_rows(const Matrix& x, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> out(x.rows());
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (x.rows() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(x.rows(), (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) out[r] = f(x.row(r));
  });
  return out;
}

}  // namespace

double sigmoid(double margin) {
  if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

double log_loss(std::span<const std::uint8_t> y, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    s -= y[i] ? std::log(q) : std::log1p(-q);
  }
  return s / static_cast<double>(y.size());
}

RandomForest train_random_forest(const Matrix& x, std::span<const std::uint8_t> y,
                                 const RandomForestParams& params, std::uint64_t seed) {
  check_labels(x, y, "random forest");
  if (params.n_trees == 0) throw RejectedInput("random forest: n_trees must be >= 1");
  const std::size_t n = x.rows(), d = x.cols();
  const BinnedMatrix bins = bin_matrix(x, params.max_bins);

  std::vector<double> class_w{1.0, 1.0};
  if (params.class_weighting == ClassWeighting::balanced) {
    std::size_t pos = 0;
    for (auto v : y) pos += v != 0;
    class_w[0] = static_cast<double>(n) / (2.0 * static_cast<double>(n - pos));
    class_w[1] = static_cast<double>(n) / (2.0 * static_cast<double>(pos));
  }

  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = params.min_leaf;
  grow.max_features = params.max_features != 0
                          ? params.max_features
                          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  RandomForest forest;
  forest.trees.resize(params.n_trees);
  std::vector<std::vector<double>> gains(params.n_trees, std::vector<double>(d, 0.0));
  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<double> count(n, 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) count[pick(rng)] += 1.0;
    std::vector<double> a(n), b(n);
    std::vector<std::size_t> rows;
    double root = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = count[i] * class_w[y[i] ? 1 : 0];
      b[i] = y[i] ? a[i] : 0.0;
      root += a[i];
      if (count[i] > 0.0) rows.push_back(i);
    }
    forest.trees[t] = grow_tree(bins, std::move(rows), a, b, count, SplitCriterion::gini, grow, rng, &gains[t]);
    for (double& g : gains[t]) g /= root;
  });
  forest.importances.assign(d, 0.0);
  for (const auto& g : gains)
    for (std::size_t f = 0; f < d; ++f) forest.importances[f] += g[f] / static_cast<double>(params.n_trees);
  normalize(forest.importances);
  return forest;
}

std::vector<double> predict_proba(const RandomForest& forest, const Matrix& x) {
  if (forest.trees.empty()) throw RejectedInput("random forest has no trees");
  const double m = static_cast<double>(forest.trees.size());
  return predict_rows(x, [&](std::span<const double> row) {
    double s = 0.0;
    for (const Tree& t : forest.trees) s += t.predict(row);
    return std::clamp(s / m, 0.0, 1.0);
  });
}

GradientBoosting train_gradient_boosting(const Matrix& x, std::span<const std::uint8_t> y,
                                         const GradientBoostingParams& params, std::uint64_t seed) {
  check_labels(x, y, "gradient boosting");
  if (!(params.learning_rate >= 0.0)) throw RejectedInput("gradient boosting: learning_rate must be >= 0");
  if (!(params.subsample > 0.0 && params.subsample <= 1.0))
    throw RejectedInput("gradient boosting: subsample must lie in (0, 1]");
  const std::size_t n = x.rows(), d = x.cols();
  const BinnedMatrix bins = bin_matrix(x, params.max_bins);

  std::size_t pos = 0;
  for (auto v : y) pos += v != 0;
  const double prev = static_cast<double>(pos) / static_cast<double>(n);

  GradientBoosting model;
  model.base_margin = std::log(prev / (1.0 - prev));
  std::vector<double> margin(n, model.base_margin), p(n), g(n), h(n), trial(n);
  const std::vector<double> ones(n, 1.0);
  std::vector<double> gains(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[i] = sigmoid(margin[i]);
  double loss = log_loss(y, p);
  model.loss_history.push_back(loss);

  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = params.min_leaf;
  grow.l2 = params.l2;

  Rng rng(derive_seed(seed, 0x6b7));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const std::size_t take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = p[i] - (y[i] ? 1.0 : 0.0);
      h[i] = std::max(p[i] * (1.0 - p[i]), 1e-16);
    }
    std::vector<std::size_t> rows = all;
    if (take < n) {
      for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(rows[i], rows[pick(rng)]);
      }
      rows.resize(take);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<double> round_gains(d, 0.0);
    Tree tree = grow_tree(bins, std::move(rows), h, g, ones, SplitCriterion::newton, grow, rng, &round_gains);

    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = tree.predict(x.row(i));
    double scale = params.learning_rate;
    double new_loss = loss;
    for (int attempt = 0; attempt < 40 && scale > 0.0; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = sigmoid(margin[i] + scale * step[i]);
      new_loss = log_loss(y, trial);
      if (new_loss <= loss) break;
      scale /= 2.0;
    }
    if (!(new_loss <= loss)) {
      scale = 0.0;
      new_loss = loss;
    }
    for (auto& node : tree.nodes)
      if (node.feature < 0) node.value *= scale;
    if (scale > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        margin[i] += scale * step[i];
        p[i] = sigmoid(margin[i]);
      }
      for (std::size_t f = 0; f < d; ++f) gains[f] += round_gains[f];
    }
    loss = new_loss;
    model.trees.push_back(std::move(tree));
    model.loss_history.push_back(loss);
  }
  model.importances = std::move(gains);
  normalize(model.importances);
  return model;
}

std::vector<double> predict_margin(const GradientBoosting& model, const Matrix& x) {
  return predict_rows(x, [&](std::span<const double> row) {
    double m = model.base_margin;
    for (const Tree& t : model.trees) m += t.predict(row);
    return m;
  });
}

std::vector<double> predict_proba(const GradientBoosting& model, const Matrix& x) {
  auto m = predict_margin(model, x);
  for (double& v : m) v = sigmoid(v);
  return m;
}

}  // namespace segad::detectors
