#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segad/changepoint/changefinder.hpp"
#include "segad/common/diagnostics.hpp"
#include "segad/data/dataset.hpp"

namespace segad::segmentation {

// Per-row segment ids for one channel; id 0 before the first change point,
// incremented by one at every change point row.
struct SegmentMap {
  std::vector<int> ids;
  changepoint::CPList boundaries;

  std::size_t rows() const { return ids.size(); }
  std::size_t segment_count() const { return ids.empty() ? 0 : static_cast<std::size_t>(ids.back()) + 1; }
  // Row range [begin, end) of each segment, in id order.
  std::vector<data::RowRange> ranges() const;
};

SegmentMap assign_segments(const changepoint::CPList& cps, std::size_t n_rows);

// Rebuilds a map from a stored "<channel>_segment" column. Throws
// RejectedInput unless ids start at 0 and step by exactly 0 or 1.
SegmentMap segment_map_from_column(const std::vector<double>& ids);

inline constexpr double kFRatioEpsilon = 1e-12;

// One-way ANOVA F statistic. Rows whose group id is negative (noise) are
// ignored. When the within mean square falls below kFRatioEpsilon (or there
// are no within degrees of freedom) it is floored and capped is set.
struct SegmentStats {
  double f_ratio = 0.0;
  std::size_t between_df = 0;
  std::size_t within_df = 0;
  bool capped = false;
  double ssb = 0.0;
  double ssw = 0.0;
};

// Throws RejectedInput when fewer than two groups remain.
SegmentStats f_ratio(std::span<const double> values, std::span<const int> groups);

// F(values, a) - F(values, b), or nullopt when either labeling has fewer than
// two non-noise clusters.
std::optional<double> delta_f(std::span<const double> values, std::span<const int> labels_a,
                              std::span<const int> labels_b);

struct ChannelSegmentation {
  std::string channel;
  SegmentMap map;
  // Per-segment delta-F; nullopt entries are undefined. No column is emitted
  // when the whole vector is absent.
  std::optional<std::vector<std::optional<double>>> delta_f;
};

struct SegmentEncoding {
  std::vector<std::string> added_columns;
  // "<channel>_delta_f" columns containing at least one undefined segment
  // (emitted as 0).
  std::vector<std::string> undefined_delta_f;
};

// Adds "<channel>_delta_f" (origin delta_f) broadcast by segment; undefined
// segments are written as 0. Returns false when any segment was undefined.
bool append_delta_f_column(data::LabeledDataset& dataset, const std::string& channel, const SegmentMap& map,
                           const std::vector<std::optional<double>>& delta_f);

// Adds "<channel>_segment" (origin segment) and, when delta-F is supplied,
// "<channel>_delta_f" (origin delta_f, broadcast by segment) columns.
SegmentEncoding encode_segment_features(data::LabeledDataset& dataset,
                                        const std::vector<ChannelSegmentation>& channels);

struct FRatioRow {
  std::string feature;
  SegmentStats stats;
};

// F-ratio of each listed column over its channel's segments; sorted by
// decreasing F. Columns whose segmentation has a single segment are skipped.
std::vector<FRatioRow> f_ratio_report(const data::LabeledDataset& dataset,
                                      const std::vector<std::pair<std::size_t, const SegmentMap*>>& columns);

// "feature,f_ratio,capped"
std::string f_ratio_csv(const std::vector<FRatioRow>& rows);

}  // namespace segad::segmentation
