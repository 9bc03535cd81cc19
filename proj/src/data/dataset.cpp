#include "segad/data/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "segad/common/error.hpp"
#include "segad/common/text.hpp"

namespace segad::data {

namespace {
constexpr std::pair<ColumnOrigin, std::string_view> kOriginNames[] = {
    {ColumnOrigin::raw, "raw"},           {ColumnOrigin::segment, "segment"},
    {ColumnOrigin::cp_feature, "cp_feature"}, {ColumnOrigin::cluster, "cluster"},
    {ColumnOrigin::delta_f, "delta_f"},   {ColumnOrigin::score, "score"},
};
}  // namespace

std::string_view to_string(ColumnOrigin origin) {
  for (const auto& [o, name] : kOriginNames)
    if (o == origin) return name;
  return "raw";
}

std::optional<ColumnOrigin> parse_origin(std::string_view name) {
  for (const auto& [o, n] : kOriginNames)
    if (n == name) return o;
  return std::nullopt;
}

std::optional<std::size_t> LabeledDataset::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

const Column& LabeledDataset::column(std::string_view name) const {
  auto idx = find(name);
  if (!idx) throw RejectedInput("no column named '" + std::string(name) + "'");
  return columns[*idx];
}

std::vector<std::string> LabeledDataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::vector<std::size_t> LabeledDataset::columns_with_origin(ColumnOrigin origin) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].origin == origin) out.push_back(i);
  return out;
}

void LabeledDataset::add_column(Column column) {
  if (column.values.size() != rows())
    throw RejectedInput("column '" + column.name + "' has " +
                        std::to_string(column.values.size()) + " rows, dataset has " +
                        std::to_string(rows()));
  if (find(column.name))
    throw RejectedInput("duplicate column name '" + column.name + "'");
  columns.push_back(std::move(column));
}

Matrix LabeledDataset::matrix(std::span<const std::size_t> cols) const {
  return matrix(cols, 0, rows());
}

Matrix LabeledDataset::matrix(std::span<const std::size_t> cols, std::size_t begin,
                              std::size_t end) const {
  Matrix out(end - begin, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto& v = columns.at(cols[j]).values;
    for (std::size_t r = begin; r < end; ++r) out(r - begin, j) = v[r];
  }
  return out;
}

double LabeledDataset::prevalence() const {
  if (labels.empty()) return 0.0;
  const auto positives = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  return static_cast<double>(positives) / static_cast<double>(labels.size());
}

LabeledDataset align_labels(const TimeSeriesFrame& frame, const LabelTimeline& timeline,
                            Diagnostics* diag) {
  LabeledDataset ds;
  ds.timestamps = frame.timestamps;
  ds.step_seconds = frame.step_seconds;
  for (std::size_t c = 0; c < frame.channels.size(); ++c)
    ds.columns.push_back({frame.channels[c], ColumnOrigin::raw, frame.channel(c)});
  ds.labels = label_rows(timeline, frame.timestamps, diag);
  return ds;
}

bool selector_matches(const std::string& selector, const Column& column) {
  if (!selector.empty() && selector.front() == '@') {
    auto origin = parse_origin(std::string_view(selector).substr(1));
    return origin && *origin == column.origin;
  }
  return glob_match(selector, column.name);
}

std::vector<std::size_t> match_columns(const LabeledDataset& dataset,
                                       const std::vector<std::string>& selectors) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.columns.size(); ++i) {
    for (const auto& s : selectors) {
      if (selector_matches(s, dataset.columns[i])) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

LabeledDataset select_features(const LabeledDataset& dataset,
                               const std::vector<std::string>& keep,
                               const std::vector<ColumnOrigin>& scope) {
  auto in_scope = [&](const Column& c) {
    return scope.empty() || std::find(scope.begin(), scope.end(), c.origin) != scope.end();
  };
  LabeledDataset out;
  out.timestamps = dataset.timestamps;
  out.step_seconds = dataset.step_seconds;
  out.labels = dataset.labels;
  std::size_t matched = 0;
  for (const auto& c : dataset.columns) {
    if (!in_scope(c)) {
      out.columns.push_back(c);
      continue;
    }
    const bool hit = std::any_of(keep.begin(), keep.end(),
                                 [&](const std::string& s) { return selector_matches(s, c); });
    if (hit) {
      out.columns.push_back(c);
      ++matched;
    }
  }
  if (matched == 0) throw RejectedInput("feature selection matched no columns");
  return out;
}

std::string serialize_dataset(const LabeledDataset& dataset) {
  std::string out = "timestamp,label";
  for (const auto& c : dataset.columns) out += "," + c.name;
  out += "\n#origin,";
  for (const auto& c : dataset.columns) {
    out += ',';
    out += to_string(c.origin);
  }
  out += '\n';
  for (std::size_t r = 0; r < dataset.rows(); ++r) {
    out += format_iso8601(dataset.timestamps[r]);
    out += dataset.labels[r] ? ",1" : ",0";
    for (const auto& c : dataset.columns) {
      out += ',';
      out += format_double(c.values[r]);
    }
    out += '\n';
  }
  return out;
}

LabeledDataset parse_dataset(std::string_view source) {
  std::vector<std::string_view> lines = split(source, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() < 2) throw RejectedInput("dataset CSV needs a header and an origin line");
  const auto header = split(trim(lines[0]), ',');
  const auto origins = split(trim(lines[1]), ',');
  if (header.size() < 2 || trim(header[0]) != "timestamp" || trim(header[1]) != "label")
    throw RejectedInput("dataset CSV header must start with 'timestamp,label'");
  if (origins.size() != header.size() || trim(origins[0]) != "#origin")
    throw RejectedInput("dataset CSV second line must be the #origin row");

  LabeledDataset ds;
  for (std::size_t i = 2; i < header.size(); ++i) {
    auto origin = parse_origin(trim(origins[i]));
    if (!origin)
      throw RejectedInput("unknown column origin '" + std::string(trim(origins[i])) + "'");
    ds.columns.push_back({std::string(trim(header[i])), *origin, {}});
  }
  const std::size_t n = lines.size() - 2;
  ds.timestamps.reserve(n);
  ds.labels.reserve(n);
  for (auto& c : ds.columns) c.values.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = split(trim(lines[r + 2]), ',');
    const std::string where = "dataset row " + std::to_string(r + 3);
    if (cells.size() != header.size()) throw RejectedInput(where + ": wrong cell count");
    auto ts = parse_iso8601(cells[0]);
    if (!ts) throw RejectedInput(where + ": bad timestamp");
    ds.timestamps.push_back(*ts);
    const auto lab = trim(cells[1]);
    if (lab != "0" && lab != "1") throw RejectedInput(where + ": label must be 0 or 1");
    ds.labels.push_back(lab == "1" ? 1 : 0);
    for (std::size_t j = 0; j < ds.columns.size(); ++j) {
      auto v = parse_double(cells[j + 2]);
      if (!v) throw RejectedInput(where + ", column '" + ds.columns[j].name + "': non-numeric");
      ds.columns[j].values.push_back(*v);
    }
  }
  ds.step_seconds = validate_step(ds.timestamps);
  return ds;
}

}  // namespace segad::data
