#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"
#include "segad/detectors/forest.hpp"
#include "segad/detectors/iforest.hpp"
#include "segad/detectors/kmeans_detector.hpp"
#include "segad/detectors/ocsvm.hpp"
#include "segad/detectors/pca.hpp"

namespace segad::detectors {

enum class ModelKind { rf, gbt, ensemble, iforest, ocsvm, pca, kmeans_det };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);
bool is_supervised(ModelKind kind);

struct EnsembleModel {
  RandomForest rf;
  GradientBoosting gbt;
  double rf_weight = 0.5;
  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

struct DetectorParams {
  RandomForestParams rf;
  GradientBoostingParams gbt;
  double ensemble_rf_weight = 0.5;
  IsolationForestParams iforest;
  OneClassSvmParams ocsvm;
  PcaParams pca;
  KMeansDetectorParams kmeans;
};

// Parameters relevant to one kind, as recorded in artifacts.
nlohmann::json params_json(ModelKind kind, const DetectorParams& params);

inline constexpr std::array<double, 11> kQuantileLevels{0.0, 0.01, 0.05, 0.1, 0.25, 0.5,
                                                        0.75, 0.9, 0.95, 0.99, 1.0};

// Linear-interpolated quantile of unsorted values.
double quantile(std::vector<double> values, double level);

struct ModelArtifact {
  ModelKind kind = ModelKind::rf;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  nlohmann::json params;
  std::vector<double> score_quantiles;  // training scores at kQuantileLevels
  std::vector<std::string> warnings;
  std::variant<RandomForest, GradientBoosting, EnsembleModel, IsolationForest, OneClassSvm,
               PcaModel, KMeansDetector>
      model;

  friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

// Trains one detector. y is required for rf, gbt and ensemble and ignored
// otherwise. Training warnings are kept in the artifact and forwarded.
ModelArtifact train_model(ModelKind kind, const Matrix& x, std::span<const std::uint8_t> y,
                          std::vector<std::string> feature_names, const DetectorParams& params,
                          std::uint64_t seed, Diagnostics* diag = nullptr);

// Both members fitted on the same rows; proba = w * rf + (1 - w) * gbt.
ModelArtifact train_ensemble_rf_gbt(const Matrix& x, std::span<const std::uint8_t> y,
                                    std::vector<std::string> feature_names,
                                    const DetectorParams& params, std::uint64_t seed,
                                    Diagnostics* diag = nullptr);

// Picks the model's columns out of a matrix with the given column names.
// Throws RejectedInput when a training feature is missing.
Matrix align_columns(const ModelArtifact& model, const Matrix& x,
                     const std::vector<std::string>& names);

// Anomaly scores, higher = more anomalous (probabilities for supervised
// kinds). x must have the training column count and order.
std::vector<double> score(const ModelArtifact& model, const Matrix& x);

// rf, gbt and ensemble only.
std::vector<double> predict_proba(const ModelArtifact& model, const Matrix& x);

// Versioned JSON container; reloading reproduces the artifact exactly.
nlohmann::json to_json(const ModelArtifact& model);
// Throws SchemaMismatch on an unknown format or version.
ModelArtifact artifact_from_json(const nlohmann::json& doc);

inline constexpr int kModelFormatVersion = 1;

}  // namespace segad::detectors
