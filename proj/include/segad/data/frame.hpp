#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segad/common/diagnostics.hpp"
#include "segad/common/matrix.hpp"

namespace segad::data {

// Uniformly sampled multivariate series. values has one row per timestamp and
// one column per channel; missing cells are NaN until handle_missing runs.
struct TimeSeriesFrame {
  std::vector<std::int64_t> timestamps;  // seconds since the Unix epoch, UTC
  std::vector<std::string> channels;
  Matrix values;
  double step_seconds = 0.0;

  std::size_t rows() const { return timestamps.size(); }
  std::vector<double> channel(std::size_t c) const { return values.column(c); }
  std::optional<std::size_t> channel_index(std::string_view name) const;
  bool has_missing() const;
};

// Maximum relative deviation of a timestamp difference from the nominal step.
inline constexpr double kStepTolerance = 0.01;

// Parses "timestamp,<ch1>,<ch2>,..." CSV. When schema is non-empty only the
// listed channels are kept, in schema order. Empty cells and "NaN" parse to
// NaN. Throws RejectedInput on non-monotone or irregular timestamps and on
// non-numeric cells (message carries the row/column).
TimeSeriesFrame parse_frame(std::string_view source,
                            const std::vector<std::string>& schema = {});

// Returns the nominal step (median difference) after checking that every
// difference is positive and within kStepTolerance of it.
double validate_step(const std::vector<std::int64_t>& timestamps);

enum class MissingPolicy { forward_fill, interpolate, drop_row };

std::optional<MissingPolicy> parse_missing_policy(std::string_view name);

// Replaces NaN cells. forward_fill rejects a leading NaN; interpolate fills
// interior gaps linearly and edges with the nearest observed value; drop_row
// removes incomplete rows and re-validates the step.
TimeSeriesFrame handle_missing(const TimeSeriesFrame& frame, MissingPolicy policy);

// Inverse of parse_frame; numeric cells use the shortest exact representation.
std::string serialize_frame(const TimeSeriesFrame& frame);

}  // namespace segad::data
