#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/data/dataset.hpp"
#include "segad/detectors/model.hpp"
#include "segad/evaluation/report.hpp"

namespace segad::hybrid {

// replace: a later stage sees only the previous stage's output.
// augment: it sees the original features plus that output.
enum class FeedMode { replace, augment };

std::string_view to_string(FeedMode mode);

struct PipelineSpec {
  std::string name;
  // Stage kinds in order: optional pca, optional ocsvm | iforest, optional
  // rf | gbt | ensemble. The last stage produces the scores.
  std::vector<detectors::ModelKind> stages;
  FeedMode mode = FeedMode::replace;
  // Column selectors (globs or @origin); empty = every column.
  std::vector<std::string> features;
  // When > 0, keep only the top_k columns in top_k_scope (empty = every
  // column) ranked by random-forest importance on the training rows.
  std::size_t top_k = 0;
  std::vector<data::ColumnOrigin> top_k_scope;
  detectors::DetectorParams params;
};

// Throws RejectedInput when the stage list breaks the ordering rules.
void validate(const PipelineSpec& spec);

// Built-in specs: baseline, cp-features-all, cp-features-top3, pca+ocsvm,
// ocsvm+rf, pca+gbt, ocsvm+gbt, clustering-delta-f, top10.
std::optional<PipelineSpec> named_spec(std::string_view name, const detectors::DetectorParams& params = {});
std::vector<std::string> named_spec_names();

// A named spec, or "<kind>[+<kind>...][@augment|@replace]" over every column.
PipelineSpec parse_spec(std::string_view text, const detectors::DetectorParams& params = {});

struct Pipeline {
  PipelineSpec spec;
  std::vector<std::string> input_features;  // dataset columns after selection
  std::vector<detectors::ModelArtifact> stages;
  std::size_t train_rows = 0;  // rows [0, train_rows) were used for fitting
  std::uint64_t seed = 0;
};

// Fits the stages on rows [0, train_rows) of the dataset (all rows when 0).
// One-class stages see only the normal rows.
Pipeline train_pipeline(const PipelineSpec& spec, const data::LabeledDataset& dataset,
                        std::size_t train_rows, std::uint64_t seed, Diagnostics* diag = nullptr);

// Scores rows [begin, end) (all rows by default).
std::vector<double> score_pipeline(const Pipeline& pipeline, const data::LabeledDataset& dataset,
                                   std::size_t begin = 0, std::size_t end = SIZE_MAX);

// The pipeline's input columns over rows [begin, end).
Matrix input_matrix(const Pipeline& pipeline, const data::LabeledDataset& dataset, std::size_t begin = 0,
                    std::size_t end = SIZE_MAX);
// Scores a matrix laid out as input_features.
std::vector<double> score_matrix(const Pipeline& pipeline, const Matrix& x);

nlohmann::json pipeline_json(const Pipeline& pipeline);
Pipeline pipeline_from_json(const nlohmann::json& doc);
inline constexpr int kPipelineFormatVersion = 1;

// First row of the temporal holdout's test period.
std::size_t temporal_cut(std::size_t rows, double train_fraction);

struct ComparisonConfig {
  double train_fraction = 0.6;
  evaluation::ThresholdRule threshold;
  std::uint64_t seed = 0;
};

struct ComparisonRow {
  std::string approach;
  std::optional<double> auc_roc;
  double f1 = 0.0;
  double threshold = 0.0;
  double f1_drop_pct = 0.0;  // NaN when the reference F1 is 0
};

// round(100 (reference - f1) / reference); NaN when reference is 0.
double f1_drop_percent(double reference_f1, double f1);

// Trains every spec on the same temporal split and scores the test period.
// Throws RejectedInput for an empty spec list.
std::vector<ComparisonRow> run_comparison(const data::LabeledDataset& dataset,
                                          const std::vector<PipelineSpec>& specs,
                                          const ComparisonConfig& config, Diagnostics* diag = nullptr);

// "approach,auc_roc,f1,f1_drop_pct"
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows);

}  // namespace segad::hybrid
