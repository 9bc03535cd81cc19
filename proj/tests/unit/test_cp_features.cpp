#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "segad/common/error.hpp"
#include "segad/data/dataset.hpp"
#include "segad/features/cp_features.hpp"

using namespace segad;
using namespace segad::features;
using changepoint::CPList;

namespace {

CPList cps_of(std::vector<std::size_t> idx) {
  CPList c;
  c.indices = std::move(idx);
  return c;
}

}  // namespace

TEST(CpFeatures, PreCpWindowStatistics) {
  std::vector<double> scores{1, 2, 3, 9, 9, 9};
  const auto f = compute_cp_features(scores, cps_of({3}));
  for (std::size_t t = 3; t < 6; ++t) {
    EXPECT_DOUBLE_EQ(f.mean_score_pre_cp[t], 2.0);
    EXPECT_DOUBLE_EQ(f.max_score_pre_cp[t], 3.0);
    EXPECT_DOUBLE_EQ(f.std_score_pre_cp[t], 1.0);
    EXPECT_EQ(f.dist_last_cp[t], static_cast<double>(t - 3));
  }
}

TEST(CpFeatures, NoChangePoints) {
  std::vector<double> scores(100, 4.0);
  const auto f = compute_cp_features(scores, cps_of({}));
  EXPECT_EQ(f.mean_score_pre_cp[57], 0.0);
  EXPECT_EQ(f.dist_last_cp[57], 57.0);
  EXPECT_EQ(f.max_score_pre_cp[57], 0.0);
  EXPECT_EQ(f.std_score_pre_cp[57], 0.0);
  EXPECT_EQ(f.cp_freq[57], 0.0);
}

TEST(CpFeatures, FrequencyWindow) {
  std::vector<double> scores(500, 1.0);
  const auto f = compute_cp_features(scores, cps_of({100, 250, 300}), {.freq_window = 200});
  EXPECT_EQ(f.cp_freq[400], 2.0);
  EXPECT_EQ(f.cp_freq[300], 2.0);  // (100, 300]
  EXPECT_EQ(f.cp_freq[250], 2.0);
  EXPECT_EQ(f.cp_freq[249], 1.0);
  EXPECT_EQ(f.cp_freq[99], 0.0);
}

TEST(CpFeatures, ZeroWindowRejected) {
  EXPECT_THROW(compute_cp_features({1, 2, 3}, cps_of({}), {.freq_window = 0}), RejectedInput);
}

TEST(CpFeatures, SinglePointWindowHasZeroStd) {
  const auto f = compute_cp_features({5, 1, 1, 1}, cps_of({1}));
  EXPECT_EQ(f.std_score_pre_cp[2], 0.0);
  EXPECT_EQ(f.mean_score_pre_cp[2], 5.0);
}

TEST(CpFeatures, FixedWindowUsesLastScoresBeforeCp) {
  std::vector<double> scores{1, 2, 3, 4, 5, 6, 0, 0};
  const auto f = compute_cp_features(scores, cps_of({6}), {.freq_window = 10, .window = PreCpWindow::fixed, .fixed_window = 2});
  EXPECT_DOUBLE_EQ(f.mean_score_pre_cp[7], 5.5);
  EXPECT_DOUBLE_EQ(f.max_score_pre_cp[7], 6.0);
}

// Brute-force recomputation of every feature from the definition, and the
// structural invariants, on random score/CP sets.
TEST(CpFeatures, MatchesDefinitionAndInvariants) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 300;
    std::vector<double> scores(n);
    for (auto& s : scores) s = g(rng);
    std::vector<std::size_t> idx;
    for (std::size_t t = 1; t < n; ++t)
      if (rng() % 25 == 0) idx.push_back(t);
    const std::size_t wf = 1 + rng() % 80;
    const auto f = compute_cp_features(scores, cps_of(idx), {.freq_window = wf});
    ASSERT_EQ(f.size(), n);
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t c = 0, p = 0;
      bool any = false;
      for (std::size_t i = 0; i < idx.size() && idx[i] <= t; ++i) {
        p = any ? c : 0;
        c = idx[i];
        any = true;
      }
      std::size_t freq = 0;
      for (auto cp : idx)
        if (cp <= t && cp + wf > t) ++freq;
      EXPECT_EQ(f.cp_freq[t], static_cast<double>(freq));
      EXPECT_EQ(f.dist_last_cp[t], static_cast<double>(any ? t - c : t));
      if (!any) {
        EXPECT_EQ(f.mean_score_pre_cp[t], 0.0);
        continue;
      }
      if (c == p) continue;
      double sum = 0, mx = -INFINITY, mn = INFINITY;
      for (std::size_t i = p; i < c; ++i) {
        sum += scores[i];
        mx = std::max(mx, scores[i]);
        mn = std::min(mn, scores[i]);
      }
      const double m = sum / static_cast<double>(c - p);
      double sq = 0;
      for (std::size_t i = p; i < c; ++i) sq += (scores[i] - m) * (scores[i] - m);
      const double sd = c - p < 2 ? 0.0 : std::sqrt(sq / static_cast<double>(c - p - 1));
      EXPECT_NEAR(f.mean_score_pre_cp[t], m, 1e-9);
      EXPECT_EQ(f.max_score_pre_cp[t], mx);
      EXPECT_NEAR(f.std_score_pre_cp[t], sd, 1e-9);
      EXPECT_LE(mn, f.mean_score_pre_cp[t] + 1e-12);
      EXPECT_LE(f.mean_score_pre_cp[t], f.max_score_pre_cp[t] + 1e-12);
    }
    // Reset at CP rows, +1 elsewhere; statistics change only at CP rows.
    for (std::size_t t = 1; t < n; ++t) {
      const bool at_cp = std::binary_search(idx.begin(), idx.end(), t);
      if (at_cp) {
        EXPECT_EQ(f.dist_last_cp[t], 0.0);
      } else {
        EXPECT_EQ(f.dist_last_cp[t], f.dist_last_cp[t - 1] + 1);
        EXPECT_EQ(f.mean_score_pre_cp[t], f.mean_score_pre_cp[t - 1]);
        EXPECT_EQ(f.max_score_pre_cp[t], f.max_score_pre_cp[t - 1]);
        EXPECT_EQ(f.std_score_pre_cp[t], f.std_score_pre_cp[t - 1]);
      }
    }
  }
}

TEST(CpFeatures, OneDayRows) {
  EXPECT_EQ(one_day_rows(600), 144u);
  EXPECT_EQ(one_day_rows(86400 * 3), 1u);
}

namespace {

data::LabeledDataset with_cp_columns() {
  data::LabeledDataset ds;
  ds.timestamps = {0, 60, 120, 180};
  ds.step_seconds = 60;
  ds.labels = {0, 0, 1, 1};
  ds.add_column({"V470PT001.pv", data::ColumnOrigin::raw, {1, 2, 3, 4}});
  CPFeatureBlock b = compute_cp_features({1, 2, 3, 4}, cps_of({2}), {.freq_window = 2});
  append_cp_features(ds, "V470PT001.pv", b);
  return ds;
}

}  // namespace

TEST(CpFeatures, ColumnNaming) {
  const auto ds = with_cp_columns();
  for (auto name : kCpFeatureNames) {
    const auto idx = ds.find("V470PT001.pv_" + std::string(name));
    ASSERT_TRUE(idx.has_value()) << name;
    EXPECT_EQ(ds.columns[*idx].origin, data::ColumnOrigin::cp_feature);
  }
}

TEST(SelectFeatures, ThreeFeatureSubset) {
  const auto ds = with_cp_columns();
  const auto kept = data::select_features(
      ds, {"*_mean_score_pre_cp", "*_std_score_pre_cp", "*_max_score_pre_cp"}, {data::ColumnOrigin::cp_feature});
  EXPECT_EQ(kept.names(), (std::vector<std::string>{"V470PT001.pv", "V470PT001.pv_mean_score_pre_cp",
                                                    "V470PT001.pv_max_score_pre_cp",
                                                    "V470PT001.pv_std_score_pre_cp"}));
  EXPECT_EQ(kept.columns[1].origin, data::ColumnOrigin::cp_feature);
  EXPECT_FALSE(kept.find("V470PT001.pv_dist_last_cp").has_value());
  EXPECT_FALSE(kept.find("V470PT001.pv_cp_freq").has_value());
}

TEST(SelectFeatures, KeepAllIsIdentity) {
  const auto ds = with_cp_columns();
  const auto kept = data::select_features(ds, {"*"});
  EXPECT_EQ(kept.names(), ds.names());
  for (std::size_t c = 0; c < ds.cols(); ++c) EXPECT_EQ(kept.columns[c].values, ds.columns[c].values);
}

TEST(SelectFeatures, NoMatchRejected) {
  EXPECT_THROW(data::select_features(with_cp_columns(), {"does_not_exist"}), RejectedInput);
}
