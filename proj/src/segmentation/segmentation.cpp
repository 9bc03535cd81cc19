#include "segad/segmentation/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "segad/common/error.hpp"
#include "segad/common/text.hpp"

namespace segad::segmentation {

std::vector<data::RowRange> SegmentMap::ranges() const {
  std::vector<data::RowRange> out;
  std::size_t begin = 0;
  for (std::size_t r = 1; r <= ids.size(); ++r) {
    if (r == ids.size() || ids[r] != ids[begin]) {
      out.push_back({begin, r});
      begin = r;
    }
  }
  return out;
}

SegmentMap assign_segments(const changepoint::CPList& cps, std::size_t n_rows) {
  SegmentMap m;
  m.boundaries = cps;
  m.ids.assign(n_rows, 0);
  int id = 0;
  std::size_t next = 0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    while (next < cps.indices.size() && cps.indices[next] == r) {
      ++id;
      ++next;
    }
    m.ids[r] = id;
  }
  return m;
}

SegmentMap segment_map_from_column(const std::vector<double>& ids) {
  SegmentMap m;
  m.ids.resize(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const double v = ids[r];
    const double expected_lo = r == 0 ? 0.0 : static_cast<double>(m.ids[r - 1]);
    if (!(v == expected_lo || (r > 0 && v == expected_lo + 1.0)))
      throw RejectedInput("segment column is not a valid segment map at row " +
                          std::to_string(r));
    m.ids[r] = static_cast<int>(v);
    if (r > 0 && m.ids[r] != m.ids[r - 1]) m.boundaries.indices.push_back(r);
  }
  return m;
}

SegmentStats f_ratio(std::span<const double> values, std::span<const int> groups) {
  if (values.size() != groups.size())
    throw RejectedInput("f_ratio: values and groups differ in length");
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    double mean = 0.0;
  };
  std::map<int, Acc> acc;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (groups[i] < 0) continue;
    auto& a = acc[groups[i]];
    a.sum += values[i];
    ++a.n;
    total += values[i];
    ++n;
  }
  if (acc.size() < 2)
    throw RejectedInput("f_ratio needs at least two groups (between df would be 0)");
  const double grand = total / static_cast<double>(n);
  SegmentStats s;
  for (auto& [id, a] : acc) {
    a.mean = a.sum / static_cast<double>(a.n);
    s.ssb += static_cast<double>(a.n) * (a.mean - grand) * (a.mean - grand);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (groups[i] < 0) continue;
    const double d = values[i] - acc[groups[i]].mean;
    s.ssw += d * d;
  }
  s.between_df = acc.size() - 1;
  s.within_df = n - acc.size();
  const double msb = s.ssb / static_cast<double>(s.between_df);
  double msw = s.within_df > 0 ? s.ssw / static_cast<double>(s.within_df) : 0.0;
  if (!(msw >= kFRatioEpsilon)) {
    msw = kFRatioEpsilon;
    s.capped = true;
  }
  s.f_ratio = msb / msw;
  return s;
}

namespace {
std::size_t cluster_count(std::span<const int> labels) {
  std::vector<int> ids;
  for (int l : labels)
    if (l >= 0) ids.push_back(l);
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}
}  // namespace

std::optional<double> delta_f(std::span<const double> values, std::span<const int> labels_a,
                              std::span<const int> labels_b) {
  if (labels_a.size() != values.size() || labels_b.size() != values.size())
    throw RejectedInput("delta_f: labelings must cover the same rows as values");
  if (cluster_count(labels_a) < 2 || cluster_count(labels_b) < 2) return std::nullopt;
  return f_ratio(values, labels_a).f_ratio - f_ratio(values, labels_b).f_ratio;
}

bool append_delta_f_column(data::LabeledDataset& dataset, const std::string& channel, const SegmentMap& map,
                           const std::vector<std::optional<double>>& delta_f) {
  if (map.rows() != dataset.rows())
    throw RejectedInput("segment map for '" + channel + "' has " + std::to_string(map.rows()) +
                        " rows, dataset has " + std::to_string(dataset.rows()));
  if (delta_f.size() < map.segment_count())
    throw RejectedInput("delta-F for '" + channel + "' covers fewer segments than the map");
  std::vector<double> col(dataset.rows(), 0.0);
  bool defined = true;
  for (std::size_t r = 0; r < col.size(); ++r) {
    const auto& v = delta_f[static_cast<std::size_t>(map.ids[r])];
    if (v) {
      col[r] = *v;
    } else {
      defined = false;
    }
  }
  dataset.add_column({channel + "_delta_f", data::ColumnOrigin::delta_f, std::move(col)});
  return defined;
}

SegmentEncoding encode_segment_features(data::LabeledDataset& dataset,
                                        const std::vector<ChannelSegmentation>& channels) {
  SegmentEncoding enc;
  for (const auto& ch : channels) {
    if (ch.map.rows() != dataset.rows())
      throw RejectedInput("segment map for '" + ch.channel + "' has " +
                          std::to_string(ch.map.rows()) + " rows, dataset has " +
                          std::to_string(dataset.rows()));
  }
  for (const auto& ch : channels) {
    std::vector<double> seg(ch.map.ids.begin(), ch.map.ids.end());
    dataset.add_column({ch.channel + "_segment", data::ColumnOrigin::segment, std::move(seg)});
    enc.added_columns.push_back(ch.channel + "_segment");
    if (!ch.delta_f) continue;
    const std::string name = ch.channel + "_delta_f";
    if (!append_delta_f_column(dataset, ch.channel, ch.map, *ch.delta_f)) enc.undefined_delta_f.push_back(name);
    enc.added_columns.push_back(name);
  }
  return enc;
}

std::vector<FRatioRow> f_ratio_report(
    const data::LabeledDataset& dataset,
    const std::vector<std::pair<std::size_t, const SegmentMap*>>& columns) {
  std::vector<FRatioRow> rows;
  for (const auto& [col, map] : columns) {
    if (map->segment_count() < 2) continue;
    const auto& c = dataset.columns.at(col);
    rows.push_back({c.name, f_ratio(c.values, map->ids)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FRatioRow& a, const FRatioRow& b) {
    return a.stats.f_ratio > b.stats.f_ratio;
  });
  return rows;
}

std::string f_ratio_csv(const std::vector<FRatioRow>& rows) {
  std::string out = "feature,f_ratio,capped\n";
  for (const auto& r : rows)
    out += r.feature + "," + format_double(r.stats.f_ratio) + "," +
           (r.stats.capped ? "true" : "false") + "\n";
  return out;
}

}  // namespace segad::segmentation
