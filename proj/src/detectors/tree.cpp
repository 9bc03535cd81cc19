#include "segad/detectors/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segad/common/error.hpp"

namespace segad::detectors {

BinnedMatrix bin_matrix(const Matrix& x, std::size_t max_bins) {
  if (max_bins < 2 || max_bins > 256) throw RejectedInput("max_bins must lie in [2, 256]");
  BinnedMatrix out;
  out.rows = x.rows();
  out.boundaries.resize(x.cols());
  out.codes.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> col = x.column(f);
    for (double v : col)
      if (!std::isfinite(v)) throw RejectedInput("tree training data contains non-finite values");
    std::vector<double> distinct = col;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto& bounds = out.boundaries[f];
    const std::size_t m = distinct.size();
    if (m <= max_bins) {
      for (std::size_t i = 1; i < m; ++i) bounds.push_back(distinct[i - 1] + (distinct[i] - distinct[i - 1]) / 2);
    } else {
      for (std::size_t i = 1; i < max_bins; ++i) {
        const std::size_t r = i * m / max_bins;
        bounds.push_back(distinct[r - 1] + (distinct[r] - distinct[r - 1]) / 2);
      }
    }
    auto& codes = out.codes[f];
    codes.resize(out.rows);
    for (std::size_t r = 0; r < out.rows; ++r)
      codes[r] = static_cast<std::uint8_t>(std::lower_bound(bounds.begin(), bounds.end(), col[r]) - bounds.begin());
  }
  return out;
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Stats {
  double a = 0.0, b = 0.0, count = 0.0;
};

class Grower {
 public:
  Grower(const BinnedMatrix& bins, std::span<const double> a, std::span<const double> b,
         std::span<const double> count, SplitCriterion crit, const GrowParams& params, Rng& rng,
         std::vector<double>* gains)
      : bins_(bins), a_(a), b_(b), count_(count), crit_(crit), params_(params), rng_(rng), gains_(gains) {
    features_.resize(bins.features());
    std::iota(features_.begin(), features_.end(), 0);
    if (params_.max_features == 0 || params_.max_features > features_.size())
      params_.max_features = features_.size();
  }

  Tree run(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  double impurity_gain(const Stats& l, const Stats& r, const Stats& p) const {
    if (crit_ == SplitCriterion::gini) {
      auto imp = [](const Stats& s) { return s.a > 0.0 ? 2.0 * s.b * (s.a - s.b) / s.a : 0.0; };
      return imp(p) - imp(l) - imp(r);
    }
    auto score = [&](const Stats& s) { return s.b * s.b / (s.a + params_.l2); };
    return 0.5 * (score(l) + score(r) - score(p));
  }

  double leaf_value(const Stats& s) const {
    if (crit_ == SplitCriterion::gini) return s.a > 0.0 ? s.b / s.a : 0.0;
    return -s.b / (s.a + params_.l2);
  }

  bool pure(const Stats& s) const {
    return crit_ == SplitCriterion::gini && (s.b <= 0.0 || s.b >= s.a);
  }

  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    Stats total;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = rows_[i];
      total.a += a_[r];
      total.b += b_[r];
      total.count += count_[r];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[static_cast<std::size_t>(id)].value = leaf_value(total);

    const double min_leaf = static_cast<double>(std::max<std::size_t>(params_.min_leaf, 1));
    if (depth >= params_.max_depth || total.count < 2 * min_leaf || pure(total)) return id;

    // Partial Fisher-Yates draw of the candidate features.
    for (std::size_t i = 0; i < params_.max_features; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, features_.size() - 1);
      std::swap(features_[i], features_[pick(rng_)]);
    }

    double best_gain = params_.min_gain;
    int best_feature = -1;
    std::size_t best_bin = 0;
    std::vector<Stats> hist;
    for (std::size_t fi = 0; fi < params_.max_features; ++fi) {
      const std::size_t f = features_[fi];
      const auto& bounds = bins_.boundaries[f];
      if (bounds.empty()) continue;
      const auto& codes = bins_.codes[f];
      hist.assign(bounds.size() + 1, Stats{});
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t r = rows_[i];
        Stats& h = hist[codes[r]];
        h.a += a_[r];
        h.b += b_[r];
        h.count += count_[r];
      }
      Stats left;
      for (std::size_t bin = 0; bin < bounds.size(); ++bin) {
        left.a += hist[bin].a;
        left.b += hist[bin].b;
        left.count += hist[bin].count;
        const Stats right{total.a - left.a, total.b - left.b, total.count - left.count};
        if (left.count < min_leaf) continue;
        if (right.count < min_leaf) break;
        if (crit_ == SplitCriterion::gini && (left.a <= 0.0 || right.a <= 0.0)) continue;
        const double g = impurity_gain(left, right, total);
        if (g > best_gain) {
          best_gain = g;
          best_feature = static_cast<int>(f);
          best_bin = bin;
        }
      }
    }
    if (best_feature < 0) return id;

    const auto& codes = bins_.codes[static_cast<std::size_t>(best_feature)];
    const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return codes[r] <= best_bin; });
    const std::size_t split = static_cast<std::size_t>(mid - rows_.begin());
    if (gains_) (*gains_)[static_cast<std::size_t>(best_feature)] += best_gain;

    const int l = grow(begin, split, depth + 1);
    const int r = grow(split, end, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = bins_.boundaries[static_cast<std::size_t>(best_feature)][best_bin];
    node.left = l;
    node.right = r;
    return id;
  }

  const BinnedMatrix& bins_;
  std::span<const double> a_, b_, count_;
  SplitCriterion crit_;
  GrowParams params_;
  Rng& rng_;
  std::vector<double>* gains_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  Tree tree_;
};

}  // namespace

Tree grow_tree(const BinnedMatrix& bins, std::vector<std::size_t> rows, std::span<const double> a,
               std::span<const double> b, std::span<const double> count, SplitCriterion criterion,
               const GrowParams& params, Rng& rng, std::vector<double>* gains) {
  if (rows.empty()) throw RejectedInput("cannot grow a tree on zero rows");
  Grower g(bins, a, b, count, criterion, params, rng, gains);
  return g.run(std::move(rows));
}

}  // namespace segad::detectors
