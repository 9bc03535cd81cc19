#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segad/clustering/gmm.hpp"
#include "segad/clustering/hdbscan.hpp"
#include "segad/clustering/kmeans.hpp"
#include "segad/clustering/optics.hpp"
#include "segad/clustering/validation.hpp"
#include "segad/common/diagnostics.hpp"
#include "segad/data/dataset.hpp"
#include "segad/segmentation/segmentation.hpp"

namespace segad::clustering {

enum class Algorithm { kmeans, gmm, optics, hdbscan };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct ClusterParams {
  Algorithm algorithm = Algorithm::hdbscan;
  KMeansParams kmeans;
  GmmParams gmm;
  OpticsParams optics;
  HdbscanParams hdbscan;
  // Segments with fewer rows are skipped.
  std::size_t min_segment_size = 20;
  // Larger segments are fitted on an evenly strided sample; remaining rows
  // take the label of their nearest sampled row.
  std::size_t max_points = 2000;
};

// Runs one algorithm on a point set (subsampling above max_points).
ClusterLabeling cluster_points(const Matrix& x, const ClusterParams& params,
                               Diagnostics* diag = nullptr);

struct SegmentClustering {
  int segment = 0;
  data::RowRange rows;
  bool skipped = false;
  ClusterLabeling labeling;  // over the segment's rows
  ClusterValidation validation;
};

struct AveragedValidation {
  std::optional<double> silhouette;
  std::optional<double> calinski_harabasz;
  std::optional<double> davies_bouldin;
  std::size_t segments_scored = 0;
};

struct ChannelClustering {
  std::string channel;
  std::vector<int> labels;  // per dataset row; -1 for noise and skipped segments
  std::vector<SegmentClustering> segments;
};

struct PerSegmentResult {
  std::vector<ChannelClustering> channels;
  AveragedValidation averaged;  // mean over every scored (channel, segment)
};

// Z-scores one channel's values inside a segment (zero variance maps to 0).
Matrix segment_points(std::span<const double> values, data::RowRange rows);

// Clusters each channel's standardized values inside each of its segments.
// Validation indices are averaged over segments where they are defined.
// Throws RejectedInput when every segment is skipped.
PerSegmentResult cluster_per_segment(
    const data::LabeledDataset& dataset,
    const std::vector<std::pair<std::string, segmentation::SegmentMap>>& maps,
    const ClusterParams& params, Diagnostics* diag = nullptr);

// Appends "<channel>_subcluster" columns (origin cluster).
void append_subcluster_columns(data::LabeledDataset& dataset, const PerSegmentResult& result);

// Per-segment delta-F between two clusterings of the same channels:
// F under labels_a minus F under labels_b on the segment's standardized values.
std::vector<std::optional<double>> segment_delta_f(std::span<const double> values,
                                                   const ChannelClustering& a,
                                                   const ChannelClustering& b);

struct MetricsRow {
  std::string algorithm;
  AveragedValidation metrics;
};

// "algorithm,silhouette,ch,db,silhouette_norm,ch_norm,db_norm" where the
// normalized columns are min-max scaled across rows (db inverted so larger is
// better); undefined values are empty cells.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace segad::clustering
