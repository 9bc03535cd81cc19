#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "segad/changepoint/changefinder.hpp"
#include "segad/data/dataset.hpp"

namespace segad::features {

// Per-timestamp change point statistics for one channel.
struct CPFeatureBlock {
  std::vector<double> mean_score_pre_cp;
  std::vector<double> dist_last_cp;
  std::vector<double> max_score_pre_cp;
  std::vector<double> std_score_pre_cp;
  std::vector<double> cp_freq;

  std::size_t size() const { return dist_last_cp.size(); }
};

enum class PreCpWindow {
  segment,  // scores between the two most recent change points
  fixed,    // the last fixed_window scores before the most recent change point
};

struct CPFeatureOptions {
  std::size_t freq_window = 144;  // W_f, in rows
  PreCpWindow window = PreCpWindow::segment;
  std::size_t fixed_window = 50;
};

inline constexpr std::string_view kCpFeatureNames[] = {
    "mean_score_pre_cp", "dist_last_cp", "max_score_pre_cp", "std_score_pre_cp", "cp_freq"};

// Features at every row t of the scored series. With c(t) the latest change
// point <= t and p(t) the one before it (0 when none), mean/max/std use
// scores[p(t) .. c(t)-1]; dist_last_cp = t - c(t); cp_freq counts change
// points in (t - W_f, t]. Before the first change point every statistic is 0
// and dist_last_cp = t. std is the sample standard deviation (0 below 2 points).
CPFeatureBlock compute_cp_features(const std::vector<double>& scores,
                                   const changepoint::CPList& cps,
                                   const CPFeatureOptions& options = {});

// Rows in W_f for a one-day window at the given sampling step (at least 1).
std::size_t one_day_rows(double step_seconds);

// Appends "<channel>_<feature>" columns tagged cp_feature.
void append_cp_features(data::LabeledDataset& dataset, const std::string& channel,
                        const CPFeatureBlock& block);

}  // namespace segad::features
