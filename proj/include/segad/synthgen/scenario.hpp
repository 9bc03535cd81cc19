#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string_view>
#include <vector>

#include "segad/data/frame.hpp"
#include "segad/data/labels.hpp"

namespace segad::synthgen {

struct AnomalyWindow {
  double start_fraction = 0.8;
  double length_fraction = 0.0156;
};

// Magnitudes are in units of the channel's marginal noise sigma.
struct ScenarioConfig {
  std::size_t n_channels = 20;
  std::size_t n_rows = 50000;
  std::int64_t step_seconds = 600;
  std::int64_t start_epoch = 1577836800;  // 2020-01-01T00:00:00Z

  double regime_changes = 10.0;  // expected count per channel
  double jump_sigma = 2.0;
  double ar_min = 0.3;           // AR(1) coefficient drawn per regime
  double ar_max = 0.8;
  double noise_sigma = 1.0;
  std::size_t min_gap = 20;      // minimum rows between regime changes

  // Two windows by default so a temporal split has positives on both sides.
  std::vector<AnomalyWindow> anomalies{{0.30, 0.0156}, {0.80, 0.0156}};
  double affected_fraction = 0.3;
  double onset_sigma = 6.0;   // level offset present from the first anomalous row
  double drift_sigma = 3.0;   // additional linear drift reached at the window end
  double variance_inflation = 2.0;
};

// Same scenario with a 1 sigma drift and no onset offset.
ScenarioConfig hard_preset(ScenarioConfig base = {});

struct Scenario {
  data::TimeSeriesFrame frame;
  data::LabelTimeline noc;
  std::vector<std::vector<std::size_t>> true_cps;  // per channel, row indices
  std::vector<std::size_t> affected_channels;
  std::vector<data::RowRange> anomaly_rows;
  std::vector<double> channel_base;   // value = base + scale * latent
  std::vector<double> channel_scale;
  nlohmann::json manifest;
};

// Throws RejectedInput on an invalid configuration.
void validate(const ScenarioConfig& config);

// Piecewise-stationary AR(1) channels whose regime level moves by
// +-jump_sigma at thinned Poisson instants, staying within {-J, 0, J}.
Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

// Single-channel series of length n with level shifts of shift_sigma at the
// given rows (used for detector recall checks).
std::vector<double> step_series(std::size_t n, const std::vector<std::size_t>& shifts, double shift_sigma,
                                std::uint64_t seed);

nlohmann::json config_json(const ScenarioConfig& config);

}  // namespace segad::synthgen
