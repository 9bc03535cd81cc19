#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/detectors/forest.hpp"
#include "segad/detectors/iforest.hpp"
#include "segad/detectors/kmeans_detector.hpp"
#include "segad/detectors/model.hpp"
#include "segad/detectors/ocsvm.hpp"
#include "segad/detectors/pca.hpp"
#include "support/oracles.hpp"

using namespace segad;
using namespace segad::detectors;

namespace {

struct Labeled {
  Matrix x;
  std::vector<std::uint8_t> y;
};

Labeled xor_data() {
  Labeled d{Matrix(200, 2), {}};
  for (std::size_t i = 0; i < 200; ++i) {
    const int a = static_cast<int>(i % 2), b = static_cast<int>((i / 2) % 2);
    d.x(i, 0) = a;
    d.x(i, 1) = b;
    d.y.push_back(static_cast<std::uint8_t>(a ^ b));
  }
  return d;
}

// Two noisy classes; the label depends on the first two columns.
Labeled noisy_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Labeled out{Matrix(n, d), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) out.x(i, c) = g(rng);
    const double z = out.x(i, 0) + 0.5 * out.x(i, 1) + 0.7 * g(rng);
    out.y.push_back(z > 0.8 ? 1 : 0);
  }
  out.y[0] = 1;
  out.y[1] = 0;
  return out;
}

Labeled separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Labeled out{Matrix(n, 2), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 3 == 0;
    out.x(i, 0) = g(rng) + (pos ? 6.0 : 0.0);
    out.x(i, 1) = g(rng) - (pos ? 6.0 : 0.0);
    out.y.push_back(pos);
  }
  return out;
}

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix x(n, d);
  for (auto& v : x.data()) v = g(rng);
  return x;
}

double accuracy(const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
  double ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += (p[i] >= 0.5) == (y[i] == 1);
  return ok / static_cast<double>(p.size());
}

std::vector<std::string> names(std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < d; ++c) out.push_back("f" + std::to_string(c));
  return out;
}

}  // namespace

// ---- random forest ----

TEST(RandomForest, XorNeedsDepthTwo) {
  const auto d = xor_data();
  const auto rf = train_random_forest(d.x, d.y, {.n_trees = 20, .max_depth = 3}, 1);
  EXPECT_GE(accuracy(predict_proba(rf, d.x), d.y), 0.95);
}

TEST(RandomForest, PureSplitSingleTreeAucOne) {
  Labeled d{Matrix(40, 1), {}};
  for (std::size_t i = 0; i < 40; ++i) {
    d.x(i, 0) = static_cast<double>(i);
    d.y.push_back(i >= 25);
  }
  const auto rf = train_random_forest(d.x, d.y, {.n_trees = 1}, 4);
  EXPECT_EQ(oracle::auc_pairs(predict_proba(rf, d.x), d.y), 1.0);
}

TEST(RandomForest, SameSeedSameForest) {
  const auto d = noisy_data(300, 5, 2);
  const auto a = train_random_forest(d.x, d.y, {.n_trees = 15}, 9);
  const auto b = train_random_forest(d.x, d.y, {.n_trees = 15}, 9);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) EXPECT_EQ(a.trees[t], b.trees[t]);
  EXPECT_EQ(a.importances, b.importances);
  const auto c = train_random_forest(d.x, d.y, {.n_trees = 15}, 10);
  EXPECT_FALSE(a == c);
}

TEST(RandomForest, IndependentOfWorkerCount) {
  const auto d = noisy_data(400, 6, 3);
  set_max_workers(1);
  const auto a = train_random_forest(d.x, d.y, {.n_trees = 12}, 5);
  set_max_workers(8);
  const auto b = train_random_forest(d.x, d.y, {.n_trees = 12}, 5);
  set_max_workers(1);
  EXPECT_EQ(a, b);
}

TEST(RandomForest, ProbaBounds) {
  const auto d = noisy_data(300, 4, 6);
  const auto rf = train_random_forest(d.x, d.y, {.n_trees = 10, .class_weighting = ClassWeighting::balanced}, 1);
  for (double p : predict_proba(rf, gaussian(500, 4, 7))) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(RandomForest, AllTreesVotingOneGiveOne) {
  RandomForest rf;
  Tree leaf;
  leaf.nodes.push_back({.value = 1.0});
  rf.trees.assign(3, leaf);
  EXPECT_EQ(predict_proba(rf, gaussian(5, 2, 1)), std::vector<double>(5, 1.0));
}

TEST(RandomForest, EmptyForestRejected) {
  EXPECT_THROW(predict_proba(RandomForest{}, gaussian(2, 2, 1)), RejectedInput);
}

TEST(RandomForest, SingleClassRejected) {
  EXPECT_THROW(train_random_forest(gaussian(10, 2, 1), std::vector<std::uint8_t>(10, 0), {}, 1), RejectedInput);
}

// ---- gradient boosting ----

TEST(GradientBoosting, SeparableAucOne) {
  const auto d = separable(150, 3);
  const auto m = train_gradient_boosting(d.x, d.y, {.n_rounds = 50}, 1);
  EXPECT_EQ(oracle::auc_pairs(predict_proba(m, d.x), d.y), 1.0);
}

TEST(GradientBoosting, ZeroLearningRateIsBaseRate) {
  const auto d = noisy_data(200, 3, 4);
  const double rate = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 200.0;
  const auto m = train_gradient_boosting(d.x, d.y, {.n_rounds = 10, .learning_rate = 0.0}, 1);
  EXPECT_NEAR(m.base_margin, std::log(rate / (1 - rate)), 1e-12);
  for (double p : predict_proba(m, gaussian(20, 3, 5))) EXPECT_NEAR(p, rate, 1e-12);
}

TEST(GradientBoosting, LossNonIncreasingEveryRound) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = noisy_data(300, 5, 100 + seed);
    const auto m = train_gradient_boosting(d.x, d.y, {.n_rounds = 40, .learning_rate = 0.3, .subsample = 0.7}, seed);
    ASSERT_EQ(m.loss_history.size(), 41u);
    for (std::size_t r = 1; r < m.loss_history.size(); ++r)
      EXPECT_LE(m.loss_history[r], m.loss_history[r - 1] + 1e-9) << "seed " << seed << " round " << r;
    // The recorded loss is the real training loss of the final model.
    EXPECT_NEAR(m.loss_history.back(), log_loss(d.y, predict_proba(m, d.x)), 1e-12);
  }
}

TEST(GradientBoosting, SigmoidAndLogLoss) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  const std::vector<std::uint8_t> y{1, 0};
  const std::vector<double> p{0.8, 0.4};
  EXPECT_NEAR(log_loss(y, p), -(std::log(0.8) + std::log(0.6)) / 2.0, 1e-15);
}

// ---- isolation forest ----

TEST(IsolationForest, NormalizationConstant) {
  EXPECT_EQ(average_path_length(0), 0.0);
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_EQ(average_path_length(2), 1.0);
  // c(n) = 2 H(n-1) - 2 (n-1) / n from the harmonic sum.
  double h = 0;
  for (int i = 1; i < 256; ++i) h += 1.0 / i;
  EXPECT_NEAR(average_path_length(256), 2 * h - 2.0 * 255 / 256, 1e-12);
}

TEST(IsolationForest, ImplantGetsTopScore) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = gaussian(257, 2, seed);
    x(256, 0) = 10.0;
    x(256, 1) = 0.0;
    const auto model = train_isolation_forest(x, {.n_trees = 100, .subsample_size = 256}, seed);
    const auto s = score_iforest(model, x);
    EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 256) << "seed " << seed;
  }
}

TEST(IsolationForest, UniformScoresNearHalf) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  Matrix x(1000, 3);
  for (auto& v : x.data()) v = u(rng);
  const auto s = score_iforest(train_isolation_forest(x, {}, 3), x);
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  EXPECT_GE(mean, 0.4);
  EXPECT_LE(mean, 0.6);
}

TEST(IsolationForest, SinglePointTreeWellDefined) {
  Diagnostics diag;
  const auto model = train_isolation_forest(gaussian(1, 2, 1), {.n_trees = 3, .subsample_size = 4}, 1, &diag);
  EXPECT_EQ(model.subsample_size, 1u);
  EXPECT_FALSE(diag.empty());
  for (const auto& t : model.trees) EXPECT_EQ(path_length(t, std::vector<double>{0.0, 0.0}), 0.0);
  for (double v : score_iforest(model, gaussian(4, 2, 2))) EXPECT_TRUE(std::isfinite(v));
}

TEST(IsolationForest, TwoPointExternalNodeAdjustedByC2) {
  IsolationTree t;
  t.nodes.push_back({.feature = -1, .size = 2});
  EXPECT_EQ(path_length(t, std::vector<double>{0.0}), 1.0);
}

// ---- one-class SVM ----

TEST(OneClassSvm, NuProperty) {
  for (double nu : {0.05, 0.1, 0.2}) {
    const auto x = gaussian(200, 2, 8);
    OneClassSvmTrace trace;
    const auto m = train_ocsvm(x, {.nu = nu}, 1, nullptr, &trace);
    const auto f = ocsvm_decision(m, x);
    const double outside = static_cast<double>(std::count_if(f.begin(), f.end(), [](double v) { return v < 0; })) / 200.0;
    const double sv = static_cast<double>(m.alpha.size()) / 200.0;
    EXPECT_LE(outside, nu + 0.03) << "nu " << nu;
    EXPECT_GE(sv, nu - 0.03) << "nu " << nu;
    EXPECT_LE(trace.kkt_gap, 1e-4);
    double alpha_sum = std::accumulate(m.alpha.begin(), m.alpha.end(), 0.0);
    EXPECT_NEAR(alpha_sum, nu * 200, 1e-9);
    for (std::size_t i = 1; i < trace.dual_objective.size(); ++i)
      EXPECT_GE(trace.dual_objective[i], trace.dual_objective[i - 1] - 1e-12);
  }
}

TEST(OneClassSvm, RepeatedPointAcceptsItself) {
  const Matrix x(30, 2, 3.0);
  const auto m = train_ocsvm(x, {.nu = 0.2, .gamma = 0.5}, 1);
  for (double f : ocsvm_decision(m, Matrix(5, 2, 3.0))) EXPECT_GE(f, 0.0);
}

TEST(OneClassSvm, FarQueryScoresHighest) {
  const auto x = gaussian(150, 2, 9);
  const auto m = train_ocsvm(x, {.nu = 0.1}, 1);
  const auto train_scores = score_ocsvm(m, x);
  Matrix far(1, 2);
  far(0, 0) = 1000.0;
  EXPECT_GT(score_ocsvm(m, far)[0], *std::max_element(train_scores.begin(), train_scores.end()));
}

TEST(OneClassSvm, SubsamplesAboveCap) {
  OneClassSvmTrace trace;
  train_ocsvm(gaussian(300, 2, 1), {.nu = 0.1, .max_train = 100}, 1, nullptr, &trace);
  EXPECT_EQ(trace.training_rows, 100u);
}

// ---- PCA ----

TEST(Pca, FullBasisReconstructsTraining) {
  const auto x = gaussian(100, 5, 11);
  const auto m = fit_pca(x, {.variance_keep = 1.0});
  for (double s : score_pca_spe(m, x)) EXPECT_LE(s, 1e-9);
}

TEST(Pca, RankOneData) {
  Matrix x(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    x(i, 0) = static_cast<double>(i) - 20.0;
    x(i, 1) = 2.0 * x(i, 0) + 3.0;
  }
  const auto m = fit_pca(x, {.variance_keep = 0.9});
  EXPECT_EQ(m.components.rows(), 1u);
  EXPECT_GE(m.explained, 0.999);
  for (double s : score_pca_spe(m, x)) EXPECT_LE(s, 1e-9);
}

TEST(Pca, OrthogonalQueryDistanceSquared) {
  Matrix x(40, 2);
  for (std::size_t i = 0; i < 40; ++i) {
    const double t = static_cast<double>(i) - 19.5;
    x(i, 0) = t;
    x(i, 1) = t;
  }
  const auto m = fit_pca(x, {.variance_keep = 0.9, .standardize = false});
  Matrix q(1, 2);
  const double d = 3.0;
  q(0, 0) = 5.0 + d / std::sqrt(2.0);
  q(0, 1) = 5.0 - d / std::sqrt(2.0);
  EXPECT_NEAR(score_pca_spe(m, q)[0], d * d, 1e-9);
}

TEST(Pca, ZeroVarianceColumnDroppedWithWarning) {
  auto x = gaussian(30, 3, 2);
  for (std::size_t i = 0; i < 30; ++i) x(i, 1) = 4.0;
  Diagnostics diag;
  const auto m = fit_pca(x, {}, &diag);
  EXPECT_EQ(m.kept_columns, (std::vector<std::size_t>{0, 2}));
  EXPECT_FALSE(diag.empty());
}

// ---- k-means distance ----

TEST(KMeansDetector, DistanceToNearestCentroid) {
  KMeansDetector m;
  m.scaler = {{0.0}, {1.0}};
  m.centroids = Matrix(2, 1);
  m.centroids(1, 0) = 10.0;
  Matrix q(3, 1);
  q(0, 0) = 0.0;
  q(1, 0) = 4.0;
  q(2, 0) = 10.0;
  EXPECT_EQ(score_kmeans_distance(m, q), (std::vector<double>{0.0, 4.0, 0.0}));
}

// With one centroid the score grows along any ray leaving it. With several,
// a ray can approach another centroid, so the check is against the
// brute-force nearest distance in the standardized space.
TEST(KMeansDetector, RadialMonotone) {
  const auto x = gaussian(200, 3, 12);
  const auto one = train_kmeans_detector(x, {.k = 1}, 1);
  const auto four = train_kmeans_detector(x, {.k = 4}, 1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> dir(3);
    for (auto& v : dir) v = g(rng);
    double prev = -1;
    for (double r : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      Matrix q(1, 3);
      for (std::size_t j = 0; j < 3; ++j)
        q(0, j) = (one.centroids(0, j) + r * dir[j]) * one.scaler.scale[j] + one.scaler.mean[j];
      const double s = score_kmeans_distance(one, q)[0];
      if (r == 0.0) EXPECT_NEAR(s, 0.0, 1e-12);
      EXPECT_GE(s, prev - 1e-12);
      prev = s;

      double want = INFINITY;
      for (std::size_t c = 0; c < 4; ++c) {
        double d2 = 0;
        for (std::size_t j = 0; j < 3; ++j) {
          const double z = (q(0, j) - four.scaler.mean[j]) / four.scaler.scale[j] - four.centroids(c, j);
          d2 += z * z;
        }
        want = std::min(want, std::sqrt(d2));
      }
      EXPECT_NEAR(score_kmeans_distance(four, q)[0], want, 1e-9);
    }
  }
}

// ---- artifacts ----

TEST(Artifact, JsonRoundTripEveryKind) {
  const auto d = noisy_data(150, 3, 13);
  DetectorParams p;
  p.rf.n_trees = 5;
  p.gbt.n_rounds = 5;
  p.iforest.n_trees = 5;
  p.kmeans.k = 3;
  for (auto kind : {ModelKind::rf, ModelKind::gbt, ModelKind::ensemble, ModelKind::iforest, ModelKind::ocsvm,
                    ModelKind::pca, ModelKind::kmeans_det}) {
    const auto m = train_model(kind, d.x, d.y, names(3), p, 7);
    const auto text = to_json(m).dump();
    const auto back = artifact_from_json(nlohmann::json::parse(text));
    EXPECT_TRUE(back == m) << to_string(kind);
    EXPECT_EQ(score(back, d.x), score(m, d.x)) << to_string(kind);
    EXPECT_EQ(m.score_quantiles.size(), kQuantileLevels.size());
  }
}

TEST(Artifact, UnknownVersionIsSchemaMismatch) {
  const auto d = noisy_data(100, 2, 1);
  DetectorParams p;
  p.rf.n_trees = 2;
  auto doc = to_json(train_model(ModelKind::rf, d.x, d.y, names(2), p, 1));
  doc["version"] = 99;
  EXPECT_THROW(artifact_from_json(doc), SchemaMismatch);
  doc["version"] = kModelFormatVersion;
  doc["format"] = "something-else";
  EXPECT_THROW(artifact_from_json(doc), SchemaMismatch);
}

TEST(Artifact, ColumnPermutationRemapped) {
  const auto d = noisy_data(200, 4, 14);
  DetectorParams p;
  p.rf.n_trees = 8;
  p.gbt.n_rounds = 8;
  for (auto kind : {ModelKind::rf, ModelKind::gbt}) {
    const auto m = train_model(kind, d.x, d.y, names(4), p, 3);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    const auto shuffled = d.x.select_cols(perm);
    std::vector<std::string> shuffled_names;
    for (auto c : perm) shuffled_names.push_back("f" + std::to_string(c));
    EXPECT_EQ(score(m, align_columns(m, shuffled, shuffled_names)), score(m, d.x));
    EXPECT_THROW(align_columns(m, shuffled, {"f2", "f0", "f3", "zz"}), RejectedInput);
  }
}

TEST(Artifact, WrongColumnCountRejected) {
  const auto d = noisy_data(100, 3, 2);
  DetectorParams p;
  p.rf.n_trees = 2;
  const auto m = train_model(ModelKind::rf, d.x, d.y, names(3), p, 1);
  EXPECT_THROW(score(m, gaussian(4, 2, 1)), RejectedInput);
}

TEST(Artifact, TrainingIndependentOfWorkers) {
  const auto d = noisy_data(300, 4, 15);
  DetectorParams p;
  p.rf.n_trees = 10;
  p.gbt.n_rounds = 10;
  p.iforest.n_trees = 20;
  for (auto kind : {ModelKind::ensemble, ModelKind::iforest, ModelKind::ocsvm, ModelKind::kmeans_det}) {
    set_max_workers(1);
    const auto a = train_model(kind, d.x, d.y, names(4), p, 5);
    const auto sa = score(a, d.x);
    set_max_workers(6);
    const auto b = train_model(kind, d.x, d.y, names(4), p, 5);
    const auto sb = score(b, d.x);
    set_max_workers(1);
    EXPECT_TRUE(a == b) << to_string(kind);
    EXPECT_EQ(sa, sb) << to_string(kind);
  }
}
