#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/data/dataset.hpp"
#include "segad/synthgen/scenario.hpp"

using namespace segad;
using namespace segad::synthgen;

namespace {

ScenarioConfig small() {
  ScenarioConfig c;
  c.n_channels = 6;
  c.n_rows = 6000;
  return c;
}

double mean_of(const std::vector<double>& v, std::size_t b, std::size_t e) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(b), v.begin() + static_cast<std::ptrdiff_t>(e), 0.0) /
         static_cast<double>(e - b);
}

}  // namespace

TEST(Synthgen, SameSeedBitIdentical) {
  const auto a = generate_scenario(small(), 5);
  set_max_workers(4);
  const auto b = generate_scenario(small(), 5);
  set_max_workers(1);
  EXPECT_EQ(a.frame.values, b.frame.values);
  EXPECT_EQ(a.true_cps, b.true_cps);
  EXPECT_EQ(a.manifest.dump(), b.manifest.dump());
  EXPECT_NE(generate_scenario(small(), 6).frame.values, a.frame.values);
}

TEST(Synthgen, ZeroJumpHasNoChangePoints) {
  auto c = small();
  c.jump_sigma = 0.0;
  const auto s = generate_scenario(c, 1);
  for (const auto& cps : s.true_cps) EXPECT_TRUE(cps.empty());
}

TEST(Synthgen, RegimeChangesRespectMinimumGap) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = small();
    c.regime_changes = 40;
    const auto s = generate_scenario(c, seed);
    for (const auto& cps : s.true_cps) {
      std::size_t last = 0;
      for (auto cp : cps) {
        EXPECT_GE(cp - last, c.min_gap);
        EXPECT_LT(cp + c.min_gap, c.n_rows + 1);
        last = cp;
      }
    }
  }
}

TEST(Synthgen, PrevalenceWithinOneRowPerWindow) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto c = small();
    c.n_rows = 7001;
    const auto s = generate_scenario(c, seed);
    const auto ds = data::align_labels(s.frame, s.noc);
    std::size_t labeled = 0;
    for (auto l : ds.labels) labeled += l;
    double expected = 0;
    for (const auto& w : c.anomalies) expected += w.length_fraction * static_cast<double>(c.n_rows);
    EXPECT_LE(std::abs(static_cast<double>(labeled) - expected), static_cast<double>(c.anomalies.size()));
    std::size_t rows = 0;
    for (const auto& w : s.anomaly_rows) rows += w.size();
    EXPECT_EQ(labeled, rows);
    EXPECT_EQ(s.manifest.at("anomalous_rows").get<std::size_t>(), rows);
  }
}

TEST(Synthgen, WindowLengthMatchesDaySpan) {
  // 448 days at 10-minute steps; a 1.56% window is about a week of rows.
  ScenarioConfig c;
  c.n_channels = 1;
  c.n_rows = 448 * 144;
  c.anomalies = {{0.5, 0.0156}};
  const auto s = generate_scenario(c, 1);
  ASSERT_EQ(s.anomaly_rows.size(), 1u);
  const double days = static_cast<double>(s.anomaly_rows[0].size()) * 600.0 / 86400.0;
  EXPECT_NEAR(days, 7.0, 0.05);
}

// Consecutive true regimes differ by the configured jump, up to the sampling
// error of the two segment means.
TEST(Synthgen, RegimeMeansDifferByJump) {
  double z_sum = 0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = small();
    const auto s = generate_scenario(c, seed);
    for (std::size_t ch = 0; ch < c.n_channels; ++ch) {
      if (std::find(s.affected_channels.begin(), s.affected_channels.end(), ch) != s.affected_channels.end()) continue;
      std::vector<double> latent(c.n_rows);
      for (std::size_t t = 0; t < c.n_rows; ++t)
        latent[t] = (s.frame.values(t, ch) - s.channel_base[ch]) / s.channel_scale[ch];
      std::vector<std::size_t> bounds{0};
      bounds.insert(bounds.end(), s.true_cps[ch].begin(), s.true_cps[ch].end());
      bounds.push_back(c.n_rows);
      for (std::size_t i = 1; i + 1 < bounds.size(); ++i) {
        const double la = static_cast<double>(bounds[i] - bounds[i - 1]);
        const double lb = static_cast<double>(bounds[i + 1] - bounds[i]);
        const double diff = std::abs(mean_of(latent, bounds[i], bounds[i + 1]) - mean_of(latent, bounds[i - 1], bounds[i]));
        z_sum += (diff - c.jump_sigma * c.noise_sigma) / (c.noise_sigma * std::sqrt(1.0 / la + 1.0 / lb));
        ++count;
      }
    }
  }
  ASSERT_GT(count, 100u);
  EXPECT_LE(std::abs(z_sum / static_cast<double>(count)), 3.0);
}

TEST(Synthgen, AffectedChannelsShiftInsideWindow) {
  const auto c = small();
  const auto s = generate_scenario(c, 3);
  EXPECT_EQ(s.affected_channels.size(), 2u);
  for (std::size_t ch : s.affected_channels) {
    for (const auto& w : s.anomaly_rows) {
      std::vector<double> latent(c.n_rows);
      for (std::size_t t = 0; t < c.n_rows; ++t)
        latent[t] = (s.frame.values(t, ch) - s.channel_base[ch]) / s.channel_scale[ch];
      const double inside = mean_of(latent, w.begin, w.end);
      const double before = mean_of(latent, w.begin - 50, w.begin);
      // Onset plus half the drift on average, against at most one jump of regime.
      EXPECT_GT(std::abs(inside - before), c.onset_sigma + 0.5 * c.drift_sigma - c.jump_sigma - 1.0);
    }
  }
}

TEST(Synthgen, HardPresetWeakensAnomaly) {
  const auto h = hard_preset();
  EXPECT_EQ(h.drift_sigma, 1.0);
  EXPECT_EQ(h.onset_sigma, 0.0);
  EXPECT_EQ(h.n_rows, ScenarioConfig{}.n_rows);
}

TEST(Synthgen, InvalidConfigRejected) {
  auto c = small();
  c.anomalies = {{0.95, 0.1}};
  EXPECT_THROW(generate_scenario(c, 1), RejectedInput);
  c = small();
  c.anomalies = {{0.3, 0.1}, {0.35, 0.1}};
  EXPECT_THROW(generate_scenario(c, 1), RejectedInput);
  c = small();
  c.affected_fraction = 1.0;
  EXPECT_THROW(generate_scenario(c, 1), RejectedInput);
  c = small();
  c.ar_max = 1.0;
  EXPECT_THROW(generate_scenario(c, 1), RejectedInput);
}

TEST(StepSeries, ShiftsAtGivenRows) {
  const auto x = step_series(3000, {1000, 2000}, 10.0, 4);
  ASSERT_EQ(x.size(), 3000u);
  const double a = mean_of(x, 0, 1000), b = mean_of(x, 1000, 2000), c = mean_of(x, 2000, 3000);
  EXPECT_NEAR(std::abs(b - a), 10.0, 0.2);
  EXPECT_NEAR(std::abs(c - b), 10.0, 0.2);
  EXPECT_EQ(step_series(3000, {1000, 2000}, 10.0, 4), x);
}
