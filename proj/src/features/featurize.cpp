#include "segad/features/featurize.hpp"

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"

namespace segad::features {

std::vector<ChannelChangepoints> detect_changepoints(const data::TimeSeriesFrame& frame,
                                                     const changepoint::ChangeFinderParams& params,
                                                     const changepoint::ThresholdRule& rule) {
  std::vector<ChannelChangepoints> out(frame.channels.size());
  parallel_for(out.size(), [&](std::size_t c) {
    out[c].channel = frame.channels[c];
    out[c].scores = changepoint::changefinder_score(frame.channel(c), params);
    out[c].cps = changepoint::extract_changepoints(out[c].scores, rule);
  });
  return out;
}

Featurized featurize(const data::TimeSeriesFrame& frame, const data::LabelTimeline& noc,
                     const std::vector<ChannelChangepoints>& changepoints,
                     const FeaturizeOptions& options, Diagnostics* diag) {
  Featurized f;
  f.dataset = data::align_labels(frame, noc, diag);
  std::vector<segmentation::ChannelSegmentation> segs;
  for (const auto& cp : changepoints) {
    if (!frame.channel_index(cp.channel))
      throw RejectedInput("change points given for unknown channel '" + cp.channel + "'");
    if (cp.scores.size() != frame.rows())
      throw RejectedInput("change scores for '" + cp.channel + "' do not cover the frame");
    auto map = segmentation::assign_segments(cp.cps, frame.rows());
    f.maps.emplace_back(cp.channel, map);
    segs.push_back({cp.channel, std::move(map), std::nullopt});
  }
  if (options.segments) segmentation::encode_segment_features(f.dataset, segs);
  if (options.cp_features) {
    std::vector<CPFeatureBlock> blocks(changepoints.size());
    parallel_for(blocks.size(), [&](std::size_t i) {
      blocks[i] = compute_cp_features(changepoints[i].scores.outlier_scores, changepoints[i].cps, options.cp);
    });
    for (std::size_t i = 0; i < blocks.size(); ++i) append_cp_features(f.dataset, changepoints[i].channel, blocks[i]);
  }
  return f;
}

std::vector<std::pair<std::string, segmentation::SegmentMap>> segment_maps_from(const data::LabeledDataset& dataset) {
  std::vector<std::pair<std::string, segmentation::SegmentMap>> out;
  for (const auto& col : dataset.columns) {
    if (col.origin != data::ColumnOrigin::segment) continue;
    const std::string suffix = "_segment";
    if (col.name.size() <= suffix.size() || col.name.compare(col.name.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    out.emplace_back(col.name.substr(0, col.name.size() - suffix.size()), segmentation::segment_map_from_column(col.values));
  }
  if (out.empty()) throw RejectedInput("dataset has no <channel>_segment columns");
  return out;
}

}  // namespace segad::features
