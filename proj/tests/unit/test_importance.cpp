#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "segad/common/error.hpp"
#include "segad/importance/importance.hpp"

using namespace segad;
using namespace segad::importance;
using detectors::ModelKind;

namespace {

struct Planted {
  Matrix x;
  std::vector<std::uint8_t> y;
  std::vector<std::string> names;
};

// Column `signal` decides the label (with some flips); the rest is noise.
Planted planted(std::size_t n, std::size_t d, std::size_t signal, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Planted p{Matrix(n, d), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) p.x(i, c) = g(rng);
    p.y.push_back(p.x(i, signal) + 0.3 * g(rng) > 0.5);
  }
  for (std::size_t c = 0; c < d; ++c) p.names.push_back("x" + std::to_string(c));
  return p;
}

detectors::DetectorParams forest(std::size_t trees) {
  detectors::DetectorParams p;
  p.rf.n_trees = trees;
  return p;
}

segmentation::SegmentMap two_segments(std::size_t n, std::size_t cut) {
  changepoint::CPList cps;
  cps.indices = {cut};
  return segmentation::assign_segments(cps, n);
}

double find(const ImportanceTable& t, const std::string& scope, const std::string& feature) {
  for (const auto& r : t)
    if (r.scope == scope && r.feature == feature) return r.importance;
  ADD_FAILURE() << "missing " << scope << "/" << feature;
  return NAN;
}

}  // namespace

TEST(Mdi, PlantedFeatureRanksFirst) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = planted(300, 6, static_cast<std::size_t>(seed % 6), seed);
    const auto m = detectors::train_model(ModelKind::rf, p.x, p.y, p.names, forest(20), seed);
    const auto t = mdi_importance(m);
    hits += t.front().feature == p.names[seed % 6];
    double sum = 0;
    for (const auto& r : t) sum += r.importance;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GE(t[i - 1].importance, t[i].importance);
  }
  EXPECT_GE(hits, 95);
}

TEST(Mdi, ConstantFeatureNeverSplits) {
  auto p = planted(200, 3, 0, 1);
  for (std::size_t i = 0; i < 200; ++i) p.x(i, 2) = 7.0;
  const auto t = mdi_importance(detectors::train_model(ModelKind::rf, p.x, p.y, p.names, forest(20), 1));
  EXPECT_EQ(find(t, "global", "x2"), 0.0);
}

TEST(Mdi, DuplicatedFeatureSharesImportance) {
  const auto p = planted(400, 3, 0, 2);
  const auto single = mdi_importance(detectors::train_model(ModelKind::rf, p.x, p.y, p.names, forest(100), 3));
  Matrix dup(400, 4);
  for (std::size_t i = 0; i < 400; ++i) {
    for (std::size_t c = 0; c < 3; ++c) dup(i, c) = p.x(i, c);
    dup(i, 3) = p.x(i, 0);
  }
  const auto both = mdi_importance(
      detectors::train_model(ModelKind::rf, dup, p.y, {"x0", "x1", "x2", "x0_copy"}, forest(100), 3));
  EXPECT_NEAR(find(both, "global", "x0") + find(both, "global", "x0_copy"), find(single, "global", "x0"), 0.05);
}

TEST(Mdi, EnsembleUsesForestMember) {
  const auto p = planted(200, 3, 1, 4);
  auto params = forest(10);
  params.gbt.n_rounds = 5;
  const auto t = mdi_importance(detectors::train_model(ModelKind::ensemble, p.x, p.y, p.names, params, 1));
  EXPECT_EQ(t.front().feature, "x1");
}

TEST(Mdi, NonForestRejected) {
  const auto p = planted(100, 2, 0, 5);
  EXPECT_THROW(mdi_importance(detectors::train_model(ModelKind::iforest, p.x, {}, p.names, {}, 1)), RejectedInput);
}

TEST(Permutation, UnusedFeatureIsZero) {
  const auto p = planted(200, 3, 0, 6);
  const Scorer scorer = [](const Matrix& x) { return x.column(0); };
  const auto t = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(200, 100), {});
  for (const std::string scope : {"0", "1"}) {
    EXPECT_EQ(find(t, scope, "x1"), 0.0);
    EXPECT_EQ(find(t, scope, "x2"), 0.0);
  }
}

TEST(Permutation, PerfectPredictorDropsAboutHalf) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Matrix x(1000, 1);
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < 1000; ++i) {
    y.push_back(i % 2);
    x(i, 0) = g(rng) + (i % 2 ? 100.0 : 0.0);
  }
  const Scorer scorer = [](const Matrix& m) { return m.column(0); };
  const auto t = permutation_importance_by_segment(scorer, x, {"x0"}, y, two_segments(1000, 500), {.repetitions = 10});
  for (const auto& r : t) EXPECT_NEAR(r.importance, 0.5, 0.05) << r.scope;
}

TEST(Permutation, StandardErrorByRepetitions) {
  const auto p = planted(300, 2, 0, 8);
  const Scorer scorer = [](const Matrix& x) { return x.column(0); };
  const auto one = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(300, 150), {.repetitions = 1});
  for (const auto& r : one) {
    EXPECT_TRUE(std::isinf(r.stderr_));
    EXPECT_EQ(r.repetitions, 1u);
  }
  const auto ten = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(300, 150), {.repetitions = 10});
  for (const auto& r : ten) {
    EXPECT_TRUE(std::isfinite(r.stderr_));
    EXPECT_EQ(r.repetitions, 10u);
  }
}

TEST(Permutation, IdentityShuffleIsExactlyZero) {
  const auto p = planted(300, 3, 0, 9);
  const Scorer scorer = [](const Matrix& x) {
    std::vector<double> s(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) s[i] = x(i, 0) + 0.1 * x(i, 1) * x(i, 2);
    return s;
  };
  const auto t = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(300, 120),
                                                   {.repetitions = 3, .identity_permutation = true});
  for (const auto& r : t) EXPECT_EQ(r.importance, 0.0);
}

// Shuffling inside one segment never moves rows of another: a feature that
// is constant in segment 1 has zero importance there even though it is
// predictive in segment 0.
TEST(Permutation, SegmentsAreIsolated) {
  auto p = planted(400, 2, 0, 10);
  for (std::size_t i = 200; i < 400; ++i) p.x(i, 0) = 0.25;
  const Scorer scorer = [](const Matrix& x) {
    std::vector<double> s(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) s[i] = x(i, 0) + 1e-3 * x(i, 1);
    return s;
  };
  const auto t = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(400, 200), {.repetitions = 4});
  EXPECT_GT(find(t, "0", "x0"), 0.2);
  EXPECT_EQ(find(t, "1", "x0"), 0.0);
}

TEST(Permutation, DeterministicForSeed) {
  const auto p = planted(300, 3, 1, 11);
  const Scorer scorer = [](const Matrix& x) { return x.column(1); };
  const auto a = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(300, 100), {.seed = 3});
  const auto b = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(300, 100), {.seed = 3});
  EXPECT_EQ(importance_csv(a), importance_csv(b));
}

TEST(Permutation, SingleClassSegmentSkippedOrFallback) {
  auto p = planted(200, 2, 0, 12);
  for (std::size_t i = 100; i < 200; ++i) p.y[i] = 0;
  p.y[0] = 1;
  p.y[1] = 0;
  const Scorer scorer = [](const Matrix& x) { return x.column(0); };
  Diagnostics diag;
  const auto skipped = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(200, 100), {}, &diag);
  for (const auto& r : skipped) EXPECT_EQ(r.scope, "0");
  EXPECT_FALSE(diag.empty());
  const auto fallback = permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(200, 100),
                                                          {.accuracy_fallback = true});
  bool saw = false;
  for (const auto& r : fallback)
    if (r.scope == "1") saw = saw || r.accuracy_fallback;
  EXPECT_TRUE(saw);
}

TEST(Permutation, BadArgumentsRejected) {
  const auto p = planted(100, 2, 0, 13);
  const Scorer scorer = [](const Matrix& x) { return x.column(0); };
  EXPECT_THROW(permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(100, 50), {.repetitions = 0}),
               RejectedInput);
  EXPECT_THROW(permutation_importance_by_segment(scorer, p.x, {"only"}, p.y, two_segments(100, 50), {}), RejectedInput);
  EXPECT_THROW(permutation_importance_by_segment(scorer, p.x, p.names, p.y, two_segments(90, 50), {}), RejectedInput);
}

TEST(Categories, SingleCategoryTakesAll) {
  const ImportanceTable t{{"global", "a", 0.3}, {"global", "b", 0.7}, {"0", "a", 0.1}, {"1", "b", 0.2}};
  const auto s = category_summary(t, {{"*", "all"}});
  ASSERT_EQ(s.categories, (std::vector<std::string>{"all"}));
  EXPECT_DOUBLE_EQ(s.global[0], 1.0);
  EXPECT_DOUBLE_EQ(s.segment_level[0], 1.0);
}

TEST(Categories, ThreeToOneSplit) {
  const ImportanceTable t{{"global", "p1", 0.25}, {"global", "p2", 0.5}, {"global", "v_segment", 0.25}};
  const auto s = category_summary(t, default_categories());
  const auto at = [&](const std::string& c) {
    return s.global[static_cast<std::size_t>(std::find(s.categories.begin(), s.categories.end(), c) - s.categories.begin())];
  };
  EXPECT_DOUBLE_EQ(at("raw process variables"), 0.75);
  EXPECT_DOUBLE_EQ(at("segmented variables"), 0.25);
  EXPECT_DOUBLE_EQ(at("derived indicators"), 0.0);
}

TEST(Categories, UnmatchedFeatureCountedAsOtherWithWarning) {
  Diagnostics diag;
  const auto s = category_summary({{"global", "zzz", 1.0}}, {{"a*", "a"}}, &diag);
  EXPECT_EQ(s.categories.back(), "other");
  EXPECT_DOUBLE_EQ(s.global.back(), 1.0);
  EXPECT_FALSE(diag.empty());
  EXPECT_EQ(category_csv(s).substr(0, 30), "category,global,segment_level\n");
}

TEST(Reports, CsvAndTopK) {
  const ImportanceTable t{{"global", "a", 0.6}, {"global", "b", 0.4}};
  EXPECT_EQ(top_k_report(t, 1).substr(0, 24), "rank,feature,importance\n");
  EXPECT_NE(top_k_report(t, 1).find("1,a,"), std::string::npos);
  EXPECT_EQ(top_k_report(t, 1).find(",b,"), std::string::npos);
  EXPECT_EQ(importance_csv(t).substr(0, 44), "scope,feature,importance,stderr,repetitions\n");
}
