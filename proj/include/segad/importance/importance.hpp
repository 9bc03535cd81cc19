#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"
#include "segad/detectors/model.hpp"
#include "segad/segmentation/segmentation.hpp"

namespace segad::importance {

struct ImportanceRow {
  std::string scope;  // "global" or the segment id
  std::string feature;
  double importance = 0.0;
  double stderr_ = 0.0;  // +inf with a single repetition
  std::size_t repetitions = 1;
  bool accuracy_fallback = false;  // segment scored by accuracy instead of AUC
};

using ImportanceTable = std::vector<ImportanceRow>;

// Global mean decrease in impurity of an rf model (or an ensemble's forest
// member), sorted by decreasing importance. Throws RejectedInput otherwise.
ImportanceTable mdi_importance(const detectors::ModelArtifact& model);

using Scorer = std::function<std::vector<double>(const Matrix&)>;

struct PermutationOptions {
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;
  // Score single-class segments by accuracy at accuracy_threshold instead of
  // skipping them.
  bool accuracy_fallback = false;
  double accuracy_threshold = 0.5;
  // Test hook: "shuffle" with the identity permutation.
  bool identity_permutation = false;
};

// For each segment and feature, shuffles the feature inside the segment's
// rows and reports the mean metric drop (AUC by default). Each (segment,
// feature) cell draws from its own derived seed.
ImportanceTable permutation_importance_by_segment(const Scorer& scorer, const Matrix& x,
                                                  const std::vector<std::string>& names,
                                                  std::span<const std::uint8_t> y,
                                                  const segmentation::SegmentMap& map,
                                                  const PermutationOptions& options,
                                                  Diagnostics* diag = nullptr);

// "scope,feature,importance,stderr,repetitions"
std::string importance_csv(const ImportanceTable& table);

// Top-k global rows as "rank,feature,importance".
std::string top_k_report(const ImportanceTable& table, std::size_t k);

struct CategoryPattern {
  std::string pattern;  // glob over feature names
  std::string category;
};

// First match wins.
std::vector<CategoryPattern> default_categories();

struct CategorySummary {
  std::vector<std::string> categories;
  std::vector<double> global;         // per category, sums to 1 when any mass
  std::vector<double> segment_level;  // per category, sums to 1 when any mass
};

// Sums importances per category, global rows into one column and the mean
// over segments of the segment rows (negative means clipped to 0) into the
// other, then normalizes each column. Features matching no pattern fall into
// "other" with a warning.
CategorySummary category_summary(const ImportanceTable& table, const std::vector<CategoryPattern>& patterns,
                                 Diagnostics* diag = nullptr);

// "category,global,segment_level"
std::string category_csv(const CategorySummary& summary);

}  // namespace segad::importance
