#include "segad/changepoint/changefinder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segad/common/error.hpp"

namespace segad::changepoint {

std::size_t ChangeFinderParams::span() const {
  return std::max({static_cast<std::size_t>(std::max(order, 0)), smooth1, smooth2});
}

std::size_t ChangeFinderParams::stage2_start() const {
  return static_cast<std::size_t>(std::max(order, 1)) + 2 * span();
}

std::size_t ChangeFinderParams::warmup() const {
  const std::size_t settled =
      stage2_start() + static_cast<std::size_t>(std::max(order, 1)) + 2 * span() + smooth2 - 1;
  return skip + std::max(span(), settled);
}

std::vector<double> smooth(const std::vector<double>& scores, std::size_t window) {
  if (window == 0) throw RejectedInput("smoothing window must be >= 1");
  if (window > scores.size())
    throw RejectedInput("smoothing window exceeds series length");
  std::vector<double> out(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const std::size_t begin = t + 1 >= window ? t + 1 - window : 0;
    // Mean as offset from the window's first value: exact for constant windows.
    const double base = scores[begin];
    double acc = 0.0;
    for (std::size_t i = begin; i <= t; ++i) acc += scores[i] - base;
    out[t] = base + acc / static_cast<double>(t + 1 - begin);
  }
  return out;
}

namespace {

// Trailing mean over [first, t]; entries before first stay 0.
std::vector<double> smooth_from(const std::vector<double>& scores, std::size_t first,
                                std::size_t window) {
  std::vector<double> tail(scores.begin() + static_cast<std::ptrdiff_t>(first), scores.end());
  std::vector<double> out(scores.size(), 0.0);
  if (tail.empty()) return out;
  const auto sm = smooth(tail, std::min(window, tail.size()));
  std::copy(sm.begin(), sm.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
  return out;
}

}  // namespace

ChangeScoreSeries changefinder_score(const std::vector<double>& series,
                                     const ChangeFinderParams& params) {
  if (params.skip > series.size()) throw RejectedInput("skip exceeds series length");
  const std::size_t n = series.size() - params.skip;
  const std::size_t span = params.span();
  if (n <= 2 * span)
    throw RejectedInput("series length " + std::to_string(n) +
                        " must exceed 2 * max(k, T1, T2) = " + std::to_string(2 * span));
  if (params.smooth1 == 0 || params.smooth2 == 0)
    throw RejectedInput("smoothing window must be >= 1");

  const SdarParams sp{params.order, params.discount, params.variance_floor};
  const std::vector<double> xs(series.begin() + static_cast<std::ptrdiff_t>(params.skip),
                               series.end());

  // Stage 2 only sees smoothed stage-1 scores once stage 1 has settled: its
  // first scores come from a variance fitted to a handful of points, and
  // feeding them forward inflates the stage-2 variance for about 1/r steps.
  SdarModel m1(sp);
  std::vector<double> stage1(n);
  for (std::size_t t = 0; t < n; ++t) stage1[t] = m1.update(xs[t]);
  const std::size_t s1 = std::min(m1.warmup_length(), n);
  const auto smoothed1 = smooth_from(stage1, s1, params.smooth1);
  const std::size_t feed = std::min(params.stage2_start(), n);

  SdarModel m2(sp);
  std::vector<double> stage2(n, 0.0);
  for (std::size_t t = feed; t < n; ++t) stage2[t] = m2.update(smoothed1[t]);
  const std::size_t s2 = std::min(feed + m2.warmup_length(), n);
  const auto change = smooth_from(stage2, s2, params.smooth2);

  ChangeScoreSeries out;
  out.params = params;
  out.warmup = std::min(params.warmup(), series.size());
  out.outlier_scores.assign(series.size(), 0.0);
  out.change_scores.assign(series.size(), 0.0);
  std::copy(stage1.begin(), stage1.end(),
            out.outlier_scores.begin() + static_cast<std::ptrdiff_t>(params.skip));
  std::copy(change.begin(), change.end(),
            out.change_scores.begin() + static_cast<std::ptrdiff_t>(params.skip));
  return out;
}

CPList extract_changepoints(const ChangeScoreSeries& cs, const ThresholdRule& rule) {
  CPList out;
  out.rule = rule;
  const auto& s = cs.change_scores;
  const std::size_t first = std::min(cs.warmup, s.size());
  const std::size_t n = s.size() - first;
  if (n == 0) return out;

  double mean = 0.0;
  for (std::size_t t = first; t < s.size(); ++t) mean += s[t];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t t = first; t < s.size(); ++t) var += (s[t] - mean) * (s[t] - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  // Numerically constant scores carry no change point.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  const double threshold = mean + rule.lambda * sd;

  std::vector<std::size_t> candidates;
  for (std::size_t t = first; t < s.size(); ++t) {
    const bool rises = t == first || s[t] > s[t - 1];
    const bool holds = t + 1 == s.size() || s[t] >= s[t + 1];
    if (rises && holds && s[t] > threshold) candidates.push_back(t);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  for (auto c : candidates) {
    const bool clear = std::all_of(out.indices.begin(), out.indices.end(), [&](std::size_t k) {
      return (c > k ? c - k : k - c) >= rule.min_sep;
    });
    if (clear) out.indices.push_back(c);
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

}  // namespace segad::changepoint
