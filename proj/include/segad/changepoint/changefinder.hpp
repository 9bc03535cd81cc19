#pragma once

#include <cstddef>
#include <vector>

#include "segad/changepoint/sdar.hpp"

namespace segad::changepoint {

struct ChangeFinderParams {
  int order = 2;
  double discount = 0.005;
  std::size_t smooth1 = 5;  // T1
  std::size_t smooth2 = 5;  // T2
  double variance_floor = 1e-9;
  // Leading samples excluded from the models entirely (declared warm-up);
  // they receive score 0 and count toward the warm-up region.
  std::size_t skip = 0;

  std::size_t span() const;  // max(k, T1, T2)
  // First index (after skip) fed to the stage-2 model: stage-1 warm-up plus a
  // settling stretch of 2 * span.
  std::size_t stage2_start() const;
  // Leading entries flagged as warm-up: covers max(k, T1, T2) and the stage-2
  // warm-up, settling stretch and T2 smoothing window.
  std::size_t warmup() const;
};

struct ChangeScoreSeries {
  std::vector<double> outlier_scores;  // stage 1, raw
  std::vector<double> change_scores;   // stage 2, smoothed
  std::size_t warmup = 0;              // leading entries flagged as warm-up
  ChangeFinderParams params;

  std::size_t size() const { return change_scores.size(); }
  bool is_warmup(std::size_t t) const { return t < warmup; }
};

// Trailing moving average; the first T-1 entries average the available prefix.
// Throws RejectedInput when window is 0 or exceeds the series length.
std::vector<double> smooth(const std::vector<double>& scores, std::size_t window);

// Two-stage ChangeFinder: SDAR outlier scores, smoothed over T1, re-scored by
// a second SDAR, smoothed over T2. Requires length > 2 * max(k, T1, T2) after
// the skipped prefix. Scores before each stage's start are 0.
ChangeScoreSeries changefinder_score(const std::vector<double>& series,
                                     const ChangeFinderParams& params = {});

struct ThresholdRule {
  double lambda = 3.0;
  std::size_t min_sep = 10;
};

struct CPList {
  std::vector<std::size_t> indices;
  ThresholdRule rule;
};

// Local maxima of the change scores above mean + lambda * std (statistics over
// the non-warm-up region), thinned greedily so kept indices are at least
// min_sep apart. Higher scores win; equal scores keep the earlier index.
CPList extract_changepoints(const ChangeScoreSeries& cs, const ThresholdRule& rule = {});

}  // namespace segad::changepoint
