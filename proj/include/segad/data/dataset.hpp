#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"
#include "segad/data/frame.hpp"
#include "segad/data/labels.hpp"

namespace segad::data {

enum class ColumnOrigin { raw, segment, cp_feature, cluster, delta_f, score };

std::string_view to_string(ColumnOrigin origin);
std::optional<ColumnOrigin> parse_origin(std::string_view name);

struct Column {
  std::string name;
  ColumnOrigin origin = ColumnOrigin::raw;
  std::vector<double> values;
};

// Frame columns plus derived feature columns and per-row labels.
class LabeledDataset {
 public:
  std::vector<std::int64_t> timestamps;
  double step_seconds = 0.0;
  std::vector<Column> columns;
  std::vector<std::uint8_t> labels;

  std::size_t rows() const { return timestamps.size(); }
  std::size_t cols() const { return columns.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  const Column& column(std::string_view name) const;
  std::vector<std::string> names() const;
  std::vector<std::size_t> columns_with_origin(ColumnOrigin origin) const;

  // Appends a column; throws RejectedInput on length mismatch or duplicate name.
  void add_column(Column column);

  // Feature matrix over the given columns (all rows, or rows [begin, end)).
  Matrix matrix(std::span<const std::size_t> cols) const;
  Matrix matrix(std::span<const std::size_t> cols, std::size_t begin,
                std::size_t end) const;

  double prevalence() const;
};

// Builds a dataset from a frame and NoC timeline. Rows outside every interval
// are normal; a timeline that misses the frame span raises a warning.
LabeledDataset align_labels(const TimeSeriesFrame& frame, const LabelTimeline& timeline,
                            Diagnostics* diag = nullptr);

// Column selector: a glob over column names, or "@<origin>" for every column
// with that origin tag.
bool selector_matches(const std::string& selector, const Column& column);

// Indices of columns matched by any selector, in dataset order.
std::vector<std::size_t> match_columns(const LabeledDataset& dataset,
                                       const std::vector<std::string>& selectors);

// Keeps columns matched by a selector. Only columns whose origin is in scope
// are filtered; the rest pass through (empty scope = every column is subject
// to the filter). Throws RejectedInput when no in-scope column matches.
LabeledDataset select_features(const LabeledDataset& dataset,
                               const std::vector<std::string>& keep,
                               const std::vector<ColumnOrigin>& scope = {});

// CSV with header "timestamp,label,<names>" and a second "#origin" line
// recording each column's origin tag.
std::string serialize_dataset(const LabeledDataset& dataset);
LabeledDataset parse_dataset(std::string_view source);

}  // namespace segad::data
