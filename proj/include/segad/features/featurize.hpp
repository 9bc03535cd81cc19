#pragma once

#include <string>
#include <utility>
#include <vector>

#include "segad/changepoint/changefinder.hpp"
#include "segad/common/diagnostics.hpp"
#include "segad/data/dataset.hpp"
#include "segad/data/frame.hpp"
#include "segad/data/labels.hpp"
#include "segad/features/cp_features.hpp"
#include "segad/segmentation/segmentation.hpp"

namespace segad::features {

struct ChannelChangepoints {
  std::string channel;
  changepoint::ChangeScoreSeries scores;
  changepoint::CPList cps;
};

// ChangeFinder scoring and extraction for every channel of the frame.
std::vector<ChannelChangepoints> detect_changepoints(const data::TimeSeriesFrame& frame,
                                                     const changepoint::ChangeFinderParams& params,
                                                     const changepoint::ThresholdRule& rule);

struct FeaturizeOptions {
  bool segments = true;     // "<channel>_segment" columns
  bool cp_features = true;  // the five "<channel>_<feature>" columns
  CPFeatureOptions cp;
};

struct Featurized {
  data::LabeledDataset dataset;
  std::vector<std::pair<std::string, segmentation::SegmentMap>> maps;
};

// Raw channels, NoC labels, then segment and change point feature columns.
// The pre-CP statistics summarize the stage-1 outlier scores.
Featurized featurize(const data::TimeSeriesFrame& frame, const data::LabelTimeline& noc,
                     const std::vector<ChannelChangepoints>& changepoints,
                     const FeaturizeOptions& options, Diagnostics* diag = nullptr);

// Segment maps rebuilt from a dataset's "<channel>_segment" columns.
std::vector<std::pair<std::string, segmentation::SegmentMap>> segment_maps_from(
    const data::LabeledDataset& dataset);

}  // namespace segad::features
