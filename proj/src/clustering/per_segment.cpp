#include "segad/clustering/per_segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/text.hpp"

namespace segad::clustering {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::gmm: return "gmm";
    case Algorithm::optics: return "optics";
    case Algorithm::hdbscan: return "hdbscan";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kmeans, Algorithm::gmm, Algorithm::optics, Algorithm::hdbscan})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

namespace {

ClusterLabeling run(const Matrix& x, const ClusterParams& params, Diagnostics* diag) {
  switch (params.algorithm) {
    case Algorithm::kmeans: return kmeans_fit(x, params.kmeans).labeling;
    case Algorithm::gmm: return gmm_fit(x, params.gmm).labeling;
    case Algorithm::optics: return optics(x, params.optics).labeling;
    case Algorithm::hdbscan: return hdbscan(x, params.hdbscan, diag).labeling;
  }
  throw RejectedInput("unknown clustering algorithm");
}

std::vector<std::size_t> strided_sample(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (n <= cap || cap == 0) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) idx.push_back(i * n / cap);
  return idx;
}

struct Fitted {
  ClusterLabeling labeling;
  Matrix sample;
  std::vector<int> sample_labels;
};

Fitted fit_points(const Matrix& x, const ClusterParams& params, Diagnostics* diag) {
  const auto idx = strided_sample(x.rows(), params.max_points);
  Fitted f;
  if (idx.size() == x.rows()) {
    f.labeling = run(x, params, diag);
    f.sample = x;
    f.sample_labels = f.labeling.labels;
    return f;
  }
  f.sample = x.select_rows(idx);
  ClusterLabeling sub = run(f.sample, params, diag);
  f.sample_labels = sub.labels;
  std::vector<int> labels(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const double d = squared_distance(x.row(i), f.sample.row(s));
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    labels[i] = sub.labels[best];
  }
  f.labeling = make_labeling(std::move(labels), sub.algorithm);
  return f;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

ClusterLabeling cluster_points(const Matrix& x, const ClusterParams& params, Diagnostics* diag) {
  return fit_points(x, params, diag).labeling;
}

Matrix segment_points(std::span<const double> values, data::RowRange rows) {
  const std::size_t n = rows.size();
  Matrix out(n, 1);
  double mean = 0.0;
  for (std::size_t i = rows.begin; i < rows.end; ++i) mean += values[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = rows.begin; i < rows.end; ++i) var += (values[i] - mean) * (values[i] - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    out(i, 0) = sd > 0.0 ? (values[rows.begin + i] - mean) / sd : 0.0;
  return out;
}

PerSegmentResult cluster_per_segment(
    const data::LabeledDataset& dataset,
    const std::vector<std::pair<std::string, segmentation::SegmentMap>>& maps,
    const ClusterParams& params, Diagnostics* diag) {
  struct Job {
    std::size_t channel;
    int segment;
    data::RowRange rows;
  };
  std::vector<Job> jobs;
  PerSegmentResult res;
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const auto& [name, map] = maps[c];
    if (map.rows() != dataset.rows())
      throw RejectedInput("segment map for '" + name + "' does not cover the dataset rows");
    dataset.column(name);  // throws when missing
    const auto ranges = map.ranges();
    for (std::size_t s = 0; s < ranges.size(); ++s) jobs.push_back({c, static_cast<int>(s), ranges[s]});
    res.channels.push_back({name, std::vector<int>(dataset.rows(), kNoise), {}});
  }

  std::vector<SegmentClustering> out(jobs.size());
  std::vector<Diagnostics> notes(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const std::string& name = maps[job.channel].first;
    SegmentClustering& sc = out[j];
    sc.segment = job.segment;
    sc.rows = job.rows;
    const std::string where = name + " segment " + std::to_string(job.segment);
    if (job.rows.size() < params.min_segment_size) {
      sc.skipped = true;
      notes[j].warn("clustering: skipped " + where + " (" + std::to_string(job.rows.size()) +
                    " rows < " + std::to_string(params.min_segment_size) + ")");
      return;
    }
    const Matrix pts = segment_points(dataset.column(name).values, job.rows);
    try {
      Fitted f = fit_points(pts, params, &notes[j]);
      sc.labeling = std::move(f.labeling);
      sc.validation = validate(f.sample, f.sample_labels);
    } catch (const RejectedInput& e) {
      sc.skipped = true;
      notes[j].warn("clustering: skipped " + where + ": " + e.what());
    } catch (const ConvergenceFailure& e) {
      sc.skipped = true;
      notes[j].warn("clustering: skipped " + where + ": " + e.what());
    }
  });

  std::vector<double> sil, ch, db;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (auto& w : notes[j].warnings) warn(diag, w);
    auto& channel = res.channels[jobs[j].channel];
    const SegmentClustering& sc = out[j];
    if (!sc.skipped) {
      for (std::size_t i = 0; i < sc.rows.size(); ++i) channel.labels[sc.rows.begin + i] = sc.labeling.labels[i];
      ++res.averaged.segments_scored;
      if (sc.validation.silhouette) sil.push_back(*sc.validation.silhouette);
      if (sc.validation.calinski_harabasz) ch.push_back(*sc.validation.calinski_harabasz);
      if (sc.validation.davies_bouldin) db.push_back(*sc.validation.davies_bouldin);
    }
    channel.segments.push_back(out[j]);
  }
  if (res.averaged.segments_scored == 0)
    throw RejectedInput("clustering: every segment was skipped");
  if (!sil.empty()) res.averaged.silhouette = mean_of(sil);
  if (!ch.empty()) res.averaged.calinski_harabasz = mean_of(ch);
  if (!db.empty()) res.averaged.davies_bouldin = mean_of(db);
  return res;
}

void append_subcluster_columns(data::LabeledDataset& dataset, const PerSegmentResult& result) {
  for (const auto& ch : result.channels) {
    data::Column col{ch.channel + "_subcluster", data::ColumnOrigin::cluster, {}};
    col.values.assign(ch.labels.begin(), ch.labels.end());
    dataset.add_column(std::move(col));
  }
}

std::vector<std::optional<double>> segment_delta_f(std::span<const double> values,
                                                   const ChannelClustering& a,
                                                   const ChannelClustering& b) {
  if (a.segments.size() != b.segments.size() || a.labels.size() != values.size() ||
      b.labels.size() != values.size())
    throw RejectedInput("delta-F: clusterings do not share the same segmentation");
  std::vector<std::optional<double>> out;
  for (std::size_t s = 0; s < a.segments.size(); ++s) {
    const data::RowRange rows = a.segments[s].rows;
    if (!(rows == b.segments[s].rows))
      throw RejectedInput("delta-F: clusterings do not share the same segmentation");
    if (a.segments[s].skipped || b.segments[s].skipped) {
      out.push_back(std::nullopt);
      continue;
    }
    const Matrix pts = segment_points(values, rows);
    const std::span<const int> la(a.labels.data() + rows.begin, rows.size());
    const std::span<const int> lb(b.labels.data() + rows.begin, rows.size());
    out.push_back(segmentation::delta_f(pts.data(), la, lb));
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  using Get = std::optional<double> (*)(const AveragedValidation&);
  const Get getters[] = {
      [](const AveragedValidation& m) { return m.silhouette; },
      [](const AveragedValidation& m) { return m.calinski_harabasz; },
      [](const AveragedValidation& m) { return m.davies_bouldin; },
  };
  std::vector<std::vector<std::optional<double>>> norm(3, std::vector<std::optional<double>>(rows.size()));
  for (std::size_t g = 0; g < 3; ++g) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : rows)
      if (auto v = getters[g](r.metrics)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto v = getters[g](rows[i].metrics);
      if (!v) continue;
      double t = hi > lo ? (*v - lo) / (hi - lo) : 1.0;
      if (g == 2 && hi > lo) t = 1.0 - t;
      norm[g][i] = t;
    }
  }
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = "algorithm,silhouette,ch,db,silhouette_norm,ch_norm,db_norm\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += rows[i].algorithm;
    for (std::size_t g = 0; g < 3; ++g) out += "," + cell(getters[g](rows[i].metrics));
    for (std::size_t g = 0; g < 3; ++g) out += "," + cell(norm[g][i]);
    out += "\n";
  }
  return out;
}

}  // namespace segad::clustering
