#include "segad/data/frame.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "segad/common/error.hpp"
#include "segad/common/text.hpp"

namespace segad::data {

std::optional<std::size_t> TimeSeriesFrame::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == name) return i;
  return std::nullopt;
}

bool TimeSeriesFrame::has_missing() const {
  return std::any_of(values.data().begin(), values.data().end(),
                     [](double v) { return std::isnan(v); });
}

double validate_step(const std::vector<std::int64_t>& timestamps) {
  if (timestamps.size() < 2)
    throw RejectedInput("frame needs at least two timestamps to define a step");
  std::vector<std::int64_t> diffs(timestamps.size() - 1);
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    diffs[i - 1] = timestamps[i] - timestamps[i - 1];
    if (diffs[i - 1] <= 0)
      throw RejectedInput("non-monotone timestamps at row " + std::to_string(i + 1));
  }
  std::vector<std::int64_t> sorted = diffs;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double step = static_cast<double>(sorted[sorted.size() / 2]);
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (std::abs(static_cast<double>(diffs[i]) - step) / step > kStepTolerance)
      throw RejectedInput("irregular step at row " + std::to_string(i + 2) + ": " +
                          std::to_string(diffs[i]) + " s vs nominal " +
                          format_double(step) + " s");
  }
  return step;
}

TimeSeriesFrame parse_frame(std::string_view source, const std::vector<std::string>& schema) {
  std::vector<std::string_view> lines = split(source, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw RejectedInput("frame CSV is empty");

  const auto header = split(trim(lines[0]), ',');
  if (header.size() < 2 || trim(header[0]) != "timestamp")
    throw RejectedInput("frame CSV header must start with 'timestamp'");
  std::vector<std::string> names;
  for (std::size_t i = 1; i < header.size(); ++i) names.emplace_back(trim(header[i]));

  // Source column for each kept channel.
  std::vector<std::size_t> pick;
  if (schema.empty()) {
    for (std::size_t i = 0; i < names.size(); ++i) pick.push_back(i);
  } else {
    for (const auto& want : schema) {
      auto it = std::find(names.begin(), names.end(), want);
      if (it == names.end()) throw RejectedInput("schema channel not in header: " + want);
      pick.push_back(static_cast<std::size_t>(it - names.begin()));
    }
  }

  TimeSeriesFrame frame;
  for (auto p : pick) frame.channels.push_back(names[p]);
  const std::size_t n_rows = lines.size() - 1;
  frame.values = Matrix(n_rows, pick.size());
  frame.timestamps.reserve(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t line_no = r + 2;
    const auto cells = split(trim(lines[r + 1]), ',');
    if (cells.size() != header.size())
      throw RejectedInput("row " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " cells, got " +
                          std::to_string(cells.size()));
    auto ts = parse_iso8601(cells[0]);
    if (!ts)
      throw RejectedInput("row " + std::to_string(line_no) +
                          ": bad timestamp '" + std::string(cells[0]) + "'");
    frame.timestamps.push_back(*ts);
    for (std::size_t j = 0; j < pick.size(); ++j) {
      const auto cell = trim(cells[pick[j] + 1]);
      if (cell.empty() || cell == "NaN" || cell == "nan") {
        frame.values(r, j) = std::nan("");
        continue;
      }
      auto v = parse_double(cell);
      if (!v || !std::isfinite(*v))
        throw RejectedInput("row " + std::to_string(line_no) + ", column '" +
                            frame.channels[j] + "': non-numeric cell '" +
                            std::string(cell) + "'");
      frame.values(r, j) = *v;
    }
  }
  frame.step_seconds = validate_step(frame.timestamps);
  return frame;
}

std::optional<MissingPolicy> parse_missing_policy(std::string_view name) {
  if (name == "forward-fill") return MissingPolicy::forward_fill;
  if (name == "interpolate") return MissingPolicy::interpolate;
  if (name == "drop-row") return MissingPolicy::drop_row;
  return std::nullopt;
}

TimeSeriesFrame handle_missing(const TimeSeriesFrame& frame, MissingPolicy policy) {
  TimeSeriesFrame out = frame;
  const std::size_t n = frame.rows();
  if (policy == MissingPolicy::drop_row) {
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < n; ++r) {
      auto row = frame.values.row(r);
      if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); }))
        keep.push_back(r);
    }
    out.values = frame.values.select_rows(keep);
    out.timestamps.clear();
    for (auto r : keep) out.timestamps.push_back(frame.timestamps[r]);
    out.step_seconds = validate_step(out.timestamps);
    return out;
  }

  for (std::size_t c = 0; c < frame.channels.size(); ++c) {
    if (policy == MissingPolicy::forward_fill) {
      for (std::size_t r = 0; r < n; ++r) {
        if (!std::isnan(out.values(r, c))) continue;
        if (r == 0)
          throw RejectedInput("leading missing value in channel '" + frame.channels[c] +
                              "' has no fill source");
        out.values(r, c) = out.values(r - 1, c);
      }
      continue;
    }
    // interpolate
    std::optional<std::size_t> last;
    for (std::size_t r = 0; r < n; ++r) {
      if (std::isnan(frame.values(r, c))) continue;
      if (!last) {
        for (std::size_t g = 0; g < r; ++g) out.values(g, c) = frame.values(r, c);
      } else if (r > *last + 1) {
        const double a = frame.values(*last, c);
        const double b = frame.values(r, c);
        const double span = static_cast<double>(r - *last);
        for (std::size_t g = *last + 1; g < r; ++g)
          out.values(g, c) = a + (b - a) * static_cast<double>(g - *last) / span;
      }
      last = r;
    }
    if (!last)
      throw RejectedInput("channel '" + frame.channels[c] + "' has no observed values");
    for (std::size_t g = *last + 1; g < n; ++g) out.values(g, c) = frame.values(*last, c);
  }
  return out;
}

std::string serialize_frame(const TimeSeriesFrame& frame) {
  std::string out = "timestamp";
  for (const auto& ch : frame.channels) out += "," + ch;
  out += '\n';
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out += format_iso8601(frame.timestamps[r]);
    for (std::size_t c = 0; c < frame.channels.size(); ++c) {
      out += ',';
      out += format_double(frame.values(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace segad::data
