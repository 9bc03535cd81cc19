#include "segad/detectors/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/random.hpp"

namespace segad::detectors {

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  double harmonic;
  if (n <= 4096) {
    harmonic = 0.0;
    for (std::size_t i = n - 1; i >= 1; --i) harmonic += 1.0 / static_cast<double>(i);
  } else {
    harmonic = std::log(m) + 0.5772156649015329 + 1.0 / (2.0 * m) - 1.0 / (12.0 * m * m);
  }
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

double path_length(const IsolationTree& tree, std::span<const double> x) {
  std::size_t i = 0;
  double depth = 0.0;
  while (tree.nodes[i].feature >= 0) {
    const auto& n = tree.nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right);
    depth += 1.0;
  }
  return depth + average_path_length(tree.nodes[i].size);
}

namespace {

class Builder {
 public:
  Builder(const Matrix& x, std::size_t limit, Rng& rng) : x_(x), limit_(limit), rng_(rng) {}

  IsolationTree run(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes.back().size = end - begin;
    if (end - begin <= 1 || depth >= limit_) return id;

    // Only features that still vary inside the node can isolate anything.
    std::vector<std::size_t> candidates;
    std::vector<double> lo, hi;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      double mn = x_(rows_[begin], f), mx = mn;
      for (std::size_t i = begin + 1; i < end; ++i) {
        mn = std::min(mn, x_(rows_[i], f));
        mx = std::max(mx, x_(rows_[i], f));
      }
      if (mx > mn) {
        candidates.push_back(f);
        lo.push_back(mn);
        hi.push_back(mx);
      }
    }
    if (candidates.empty()) return id;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t c = pick(rng_);
    std::uniform_real_distribution<double> between(lo[c], hi[c]);
    double split = between(rng_);
    if (!(split > lo[c])) split = std::nextafter(lo[c], hi[c]);
    const std::size_t f = candidates[c];
    const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return x_(r, f) < split; });
    const std::size_t cut = static_cast<std::size_t>(mid - rows_.begin());
    const int l = grow(begin, cut, depth + 1);
    const int r = grow(cut, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(f);
    node.split = split;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& x_;
  std::size_t limit_;
  Rng& rng_;
  std::vector<std::size_t> rows_;
  IsolationTree tree_;
};

}  // namespace

IsolationForest train_isolation_forest(const Matrix& x, const IsolationForestParams& params,
                                       std::uint64_t seed, Diagnostics* diag) {
  const std::size_t n = x.rows();
  if (n == 0 || x.cols() == 0) throw RejectedInput("isolation forest: empty training matrix");
  if (params.n_trees == 0) throw RejectedInput("isolation forest: n_trees must be >= 1");
  if (params.subsample_size == 0) throw RejectedInput("isolation forest: subsample_size must be >= 1");
  for (double v : x.data())
    if (!std::isfinite(v)) throw RejectedInput("isolation forest: non-finite training value");

  IsolationForest forest;
  forest.subsample_size = params.subsample_size;
  if (forest.subsample_size > n) {
    warn(diag, "isolation forest: subsample_size " + std::to_string(params.subsample_size) +
                   " exceeds " + std::to_string(n) + " rows; clamped");
    forest.subsample_size = n;
  }
  const std::size_t psi = forest.subsample_size;
  const auto limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(psi, 2)))));

  forest.trees.resize(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < psi; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(psi);
    forest.trees[t] = Builder(x, limit, rng).run(std::move(idx));
  });
  return forest;
}

std::vector<double> score_iforest(const IsolationForest& forest, const Matrix& x) {
  if (forest.trees.empty()) throw RejectedInput("isolation forest has no trees");
  double norm = average_path_length(forest.subsample_size);
  if (norm <= 0.0) norm = 1.0;
  const double m = static_cast<double>(forest.trees.size());
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t r) {
    double total = 0.0;
    for (const auto& t : forest.trees) total += path_length(t, x.row(r));
    out[r] = std::exp2(-(total / m) / norm);
  });
  return out;
}

}  // namespace segad::detectors
