#include "segad/features/cp_features.hpp"

#include <algorithm>
#include <cmath>

#include "segad/common/error.hpp"

namespace segad::features {

namespace {

struct WindowStats {
  double mean = 0.0;
  double max = 0.0;
  double sd = 0.0;
};

WindowStats stats_over(const std::vector<double>& scores, std::size_t begin,
                       std::size_t end) {
  WindowStats w;
  if (end <= begin) return w;
  const double n = static_cast<double>(end - begin);
  double sum = 0.0;
  double mn = scores[begin];
  double mx = scores[begin];
  for (std::size_t i = begin; i < end; ++i) {
    sum += scores[i];
    mn = std::min(mn, scores[i]);
    mx = std::max(mx, scores[i]);
  }
  w.mean = sum / n;
  w.max = mx;
  if (end - begin >= 2) {
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) ss += (scores[i] - w.mean) * (scores[i] - w.mean);
    w.sd = std::sqrt(ss / (n - 1.0));
  }
  // Rounding can push the mean a hair outside [min, max] on near-constant windows.
  w.mean = std::clamp(w.mean, mn, mx);
  return w;
}

}  // namespace

CPFeatureBlock compute_cp_features(const std::vector<double>& scores,
                                   const changepoint::CPList& cps,
                                   const CPFeatureOptions& options) {
  if (options.freq_window == 0) throw RejectedInput("cp_freq window W_f must be > 0");
  const auto& idx = cps.indices;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= scores.size()) throw RejectedInput("change point index out of range");
    if (i > 0 && idx[i] <= idx[i - 1])
      throw RejectedInput("change points must be strictly increasing");
  }

  const std::size_t n = scores.size();
  CPFeatureBlock b;
  b.mean_score_pre_cp.assign(n, 0.0);
  b.dist_last_cp.assign(n, 0.0);
  b.max_score_pre_cp.assign(n, 0.0);
  b.std_score_pre_cp.assign(n, 0.0);
  b.cp_freq.assign(n, 0.0);

  // Statistics change only when c(t) changes; compute once per change point.
  std::vector<WindowStats> per_cp(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::size_t begin = i == 0 ? 0 : idx[i - 1];
    if (options.window == PreCpWindow::fixed)
      begin = idx[i] > options.fixed_window ? idx[i] - options.fixed_window : 0;
    per_cp[i] = stats_over(scores, begin, idx[i]);
  }

  std::size_t next = 0;        // first change point > t
  std::size_t window_lo = 0;   // first change point > t - W_f
  for (std::size_t t = 0; t < n; ++t) {
    while (next < idx.size() && idx[next] <= t) ++next;
    while (window_lo < next && idx[window_lo] + options.freq_window <= t) ++window_lo;
    b.cp_freq[t] = static_cast<double>(next - window_lo);
    if (next == 0) {
      b.dist_last_cp[t] = static_cast<double>(t);
      continue;
    }
    const std::size_t c = next - 1;
    b.dist_last_cp[t] = static_cast<double>(t - idx[c]);
    b.mean_score_pre_cp[t] = per_cp[c].mean;
    b.max_score_pre_cp[t] = per_cp[c].max;
    b.std_score_pre_cp[t] = per_cp[c].sd;
  }
  return b;
}

std::size_t one_day_rows(double step_seconds) {
  if (!(step_seconds > 0.0)) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(86400.0 / step_seconds)));
}

void append_cp_features(data::LabeledDataset& dataset, const std::string& channel,
                        const CPFeatureBlock& block) {
  const std::vector<double>* cols[] = {&block.mean_score_pre_cp, &block.dist_last_cp,
                                       &block.max_score_pre_cp, &block.std_score_pre_cp,
                                       &block.cp_freq};
  for (std::size_t i = 0; i < 5; ++i)
    dataset.add_column({channel + "_" + std::string(kCpFeatureNames[i]),
                        data::ColumnOrigin::cp_feature, *cols[i]});
}

}  // namespace segad::features
