#include "segad/data/labels.hpp"

#include <algorithm>

#include "segad/common/error.hpp"
#include "segad/common/text.hpp"

namespace segad::data {

LabelTimeline parse_noc(std::string_view source) {
  LabelTimeline timeline;
  std::vector<std::string_view> lines = split(source, '\n');
  std::size_t line_no = 0;
  bool header_seen = false;
  for (auto raw : lines) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (cells.size() == 3 && trim(cells[0]) == "start" && trim(cells[1]) == "end" &&
          trim(cells[2]) == "state")
        continue;
      throw RejectedInput("NoC header must be 'start,end,state'");
    }
    if (cells.size() != 3)
      throw RejectedInput("NoC line " + std::to_string(line_no) + ": expected 3 cells");
    auto start = parse_iso8601(cells[0]);
    auto end = parse_iso8601(cells[1]);
    if (!start || !end)
      throw RejectedInput("NoC line " + std::to_string(line_no) + ": bad timestamp");
    if (*start >= *end)
      throw RejectedInput("NoC line " + std::to_string(line_no) + ": start must precede end");
    const auto token = trim(cells[2]);
    OperatingState state;
    if (token == "normal") {
      state = OperatingState::normal;
    } else if (token == "anomalous") {
      state = OperatingState::anomalous;
    } else {
      throw RejectedInput("NoC line " + std::to_string(line_no) + ": unknown state '" +
                          std::string(token) + "'");
    }
    timeline.intervals.push_back({*start, *end, state});
  }
  std::sort(timeline.intervals.begin(), timeline.intervals.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < timeline.intervals.size(); ++i) {
    if (timeline.intervals[i].start < timeline.intervals[i - 1].end)
      throw RejectedInput("NoC intervals overlap: " +
                          format_iso8601(timeline.intervals[i - 1].start) + " and " +
                          format_iso8601(timeline.intervals[i].start));
  }
  return timeline;
}

std::string serialize_noc(const LabelTimeline& timeline) {
  std::string out = "start,end,state\n";
  for (const auto& iv : timeline.intervals) {
    out += format_iso8601(iv.start) + "," + format_iso8601(iv.end) + "," +
           (iv.state == OperatingState::anomalous ? "anomalous" : "normal") + "\n";
  }
  return out;
}

namespace {
RowRange rows_in(const LabelInterval& iv, std::span<const std::int64_t> ts) {
  const auto b = std::lower_bound(ts.begin(), ts.end(), iv.start);
  const auto e = std::lower_bound(ts.begin(), ts.end(), iv.end);
  return {static_cast<std::size_t>(b - ts.begin()), static_cast<std::size_t>(e - ts.begin())};
}
}  // namespace

std::vector<std::uint8_t> label_rows(const LabelTimeline& timeline,
                                     std::span<const std::int64_t> timestamps,
                                     Diagnostics* diag) {
  std::vector<std::uint8_t> labels(timestamps.size(), 0);
  bool any_overlap = false;
  for (const auto& iv : timeline.intervals) {
    const RowRange rr = rows_in(iv, timestamps);
    if (rr.size() > 0) any_overlap = true;
    if (iv.state != OperatingState::anomalous) continue;
    for (std::size_t r = rr.begin; r < rr.end; ++r) labels[r] = 1;
  }
  if (!timeline.intervals.empty() && !any_overlap)
    warn(diag, "no-overlap: NoC timeline lies entirely outside the frame range");
  return labels;
}

std::vector<RowRange> anomalous_row_ranges(const LabelTimeline& timeline,
                                           std::span<const std::int64_t> timestamps) {
  std::vector<RowRange> out;
  for (const auto& iv : timeline.intervals) {
    if (iv.state != OperatingState::anomalous) continue;
    const RowRange rr = rows_in(iv, timestamps);
    if (rr.size() > 0) out.push_back(rr);
  }
  return out;
}

std::vector<RowRange> runs_of_true(std::span<const std::uint8_t> labels) {
  std::vector<RowRange> out;
  std::size_t r = 0;
  while (r < labels.size()) {
    if (!labels[r]) {
      ++r;
      continue;
    }
    const std::size_t begin = r;
    while (r < labels.size() && labels[r]) ++r;
    out.push_back({begin, r});
  }
  return out;
}

}  // namespace segad::data
