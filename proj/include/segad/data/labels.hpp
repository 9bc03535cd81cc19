#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segad/common/diagnostics.hpp"

namespace segad::data {

enum class OperatingState { normal, anomalous };

// Half-open interval [start, end) of instants sharing one operating state.
struct LabelInterval {
  std::int64_t start = 0;
  std::int64_t end = 0;
  OperatingState state = OperatingState::normal;

  friend bool operator==(const LabelInterval&, const LabelInterval&) = default;
};

// NoC timeline: sorted, non-overlapping intervals. Instants outside every
// interval are normal.
struct LabelTimeline {
  std::vector<LabelInterval> intervals;
};

// Parses "start,end,state" CSV (state: normal|anomalous). An empty source
// yields an empty timeline.
LabelTimeline parse_noc(std::string_view source);
std::string serialize_noc(const LabelTimeline& timeline);

// Half-open row range [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

// Per-row anomalous flags for the given timestamps.
std::vector<std::uint8_t> label_rows(const LabelTimeline& timeline,
                                     std::span<const std::int64_t> timestamps,
                                     Diagnostics* diag = nullptr);

// Row ranges covered by each anomalous interval (intervals that miss every row
// are dropped).
std::vector<RowRange> anomalous_row_ranges(const LabelTimeline& timeline,
                                           std::span<const std::int64_t> timestamps);

// Maximal runs of true labels.
std::vector<RowRange> runs_of_true(std::span<const std::uint8_t> labels);

}  // namespace segad::data
