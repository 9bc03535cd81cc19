#include "segad/synthgen/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/random.hpp"

namespace segad::synthgen {

ScenarioConfig hard_preset(ScenarioConfig base) {
  base.onset_sigma = 0.0;
  base.drift_sigma = 1.0;
  return base;
}

void validate(const ScenarioConfig& c) {
  auto fraction = [](double v) { return v > 0.0 && v < 1.0; };
  if (c.n_channels == 0) throw RejectedInput("scenario: n_channels must be >= 1");
  if (c.n_rows < 2) throw RejectedInput("scenario: n_rows must be >= 2");
  if (c.step_seconds <= 0) throw RejectedInput("scenario: step_seconds must be > 0");
  if (!(c.regime_changes >= 0.0)) throw RejectedInput("scenario: regime_changes must be >= 0");
  if (!(c.jump_sigma >= 0.0)) throw RejectedInput("scenario: jump_sigma must be >= 0");
  if (!(c.ar_min >= 0.0 && c.ar_min <= c.ar_max && c.ar_max < 1.0))
    throw RejectedInput("scenario: AR coefficients must satisfy 0 <= ar_min <= ar_max < 1");
  if (!(c.noise_sigma > 0.0)) throw RejectedInput("scenario: noise_sigma must be > 0");
  if (!fraction(c.affected_fraction)) throw RejectedInput("scenario: affected_fraction must lie in (0, 1)");
  if (!(c.variance_inflation >= 1.0)) throw RejectedInput("scenario: variance_inflation must be >= 1");
  if (!(c.drift_sigma >= 0.0) || !(c.onset_sigma >= 0.0)) throw RejectedInput("scenario: drift and onset must be >= 0");
  std::size_t prev_end = 0;
  auto windows = c.anomalies;
  std::sort(windows.begin(), windows.end(),
            [](const auto& a, const auto& b) { return a.start_fraction < b.start_fraction; });
  for (const auto& w : windows) {
    if (!fraction(w.start_fraction) || !fraction(w.length_fraction) || w.start_fraction + w.length_fraction > 1.0)
      throw RejectedInput("scenario: anomaly window must lie inside the series with fractions in (0, 1)");
    const auto begin = static_cast<std::size_t>(std::floor(w.start_fraction * static_cast<double>(c.n_rows)));
    if (begin < prev_end) throw RejectedInput("scenario: anomaly windows overlap");
    prev_end = begin + static_cast<std::size_t>(std::llround(w.length_fraction * static_cast<double>(c.n_rows)));
  }
}

namespace {

std::vector<std::size_t> regime_instants(const ScenarioConfig& c, Rng& rng) {
  std::vector<std::size_t> out;
  if (c.jump_sigma == 0.0 || c.regime_changes == 0.0 || c.n_rows <= 2 * c.min_gap) return out;
  std::poisson_distribution<std::size_t> count(c.regime_changes);
  std::uniform_int_distribution<std::size_t> where(c.min_gap, c.n_rows - c.min_gap - 1);
  const std::size_t k = count(rng);
  std::vector<std::size_t> raw(k);
  for (auto& r : raw) r = where(rng);
  std::sort(raw.begin(), raw.end());
  std::size_t last = 0;
  for (std::size_t r : raw)
    if (r - last >= c.min_gap) {
      out.push_back(r);
      last = r;
    }
  return out;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& c, std::uint64_t seed) {
  validate(c);
  const std::size_t n = c.n_rows, m = c.n_channels;
  Scenario s;
  s.frame.step_seconds = static_cast<double>(c.step_seconds);
  s.frame.timestamps.resize(n);
  for (std::size_t t = 0; t < n; ++t) s.frame.timestamps[t] = c.start_epoch + static_cast<std::int64_t>(t) * c.step_seconds;
  for (std::size_t ch = 0; ch < m; ++ch) {
    char name[32];
    std::snprintf(name, sizeof name, "ch%02zu", ch + 1);
    s.frame.channels.emplace_back(name);
  }
  s.frame.values = Matrix(n, m);

  for (const auto& w : c.anomalies) {
    const auto begin = static_cast<std::size_t>(std::floor(w.start_fraction * static_cast<double>(n)));
    const auto len = static_cast<std::size_t>(std::llround(w.length_fraction * static_cast<double>(n)));
    s.anomaly_rows.push_back({begin, std::min(n, begin + std::max<std::size_t>(len, 1))});
  }
  std::sort(s.anomaly_rows.begin(), s.anomaly_rows.end(),
            [](const auto& a, const auto& b) { return a.begin < b.begin; });

  // Affected channels and the direction of their excursion.
  Rng pick_rng(derive_seed(seed, 0xa11));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), pick_rng);
  const std::size_t affected = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.affected_fraction * static_cast<double>(m))));
  s.affected_channels.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(affected));
  std::sort(s.affected_channels.begin(), s.affected_channels.end());
  std::vector<double> direction(m, 0.0);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t ch : s.affected_channels) direction[ch] = coin(pick_rng) ? 1.0 : -1.0;

  s.true_cps.resize(m);
  s.channel_base.resize(m);
  s.channel_scale.resize(m);
  parallel_for(m, [&](std::size_t ch) {
    Rng rng(derive_seed(seed, 1, ch));
    std::uniform_real_distribution<double> base_dist(-50.0, 50.0), scale_dist(0.5, 5.0);
    const double base = base_dist(rng), scale = scale_dist(rng);
    s.channel_base[ch] = base;
    s.channel_scale[ch] = scale;
    const auto instants = regime_instants(c, rng);
    s.true_cps[ch] = instants;

    std::uniform_real_distribution<double> ar_dist(c.ar_min, c.ar_max);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma = c.noise_sigma;
    const double jump = c.jump_sigma * sigma;
    double level = 0.0, phi = ar_dist(rng);
    double dev = sigma * gauss(rng);
    std::size_t next = 0, win = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (next < instants.size() && instants[next] == t) {
        // Mean-reverting walk over {-J, 0, J}.
        level = level != 0.0 ? 0.0 : (coin(rng) ? jump : -jump);
        phi = ar_dist(rng);
        ++next;
      }
      if (t > 0) dev = phi * dev + sigma * std::sqrt(1.0 - phi * phi) * gauss(rng);
      double latent = level + dev;
      while (win < s.anomaly_rows.size() && t >= s.anomaly_rows[win].end) ++win;
      const double extra = gauss(rng);  // drawn every row to keep streams aligned
      if (direction[ch] != 0.0 && win < s.anomaly_rows.size() && t >= s.anomaly_rows[win].begin) {
        const auto& w = s.anomaly_rows[win];
        const double progress = static_cast<double>(t - w.begin + 1) / static_cast<double>(w.size());
        latent += direction[ch] * sigma * (c.onset_sigma + c.drift_sigma * progress);
        latent += sigma * std::sqrt(c.variance_inflation - 1.0) * extra;
      }
      s.frame.values(t, ch) = base + scale * latent;
    }
  });

  // NoC: alternating normal / anomalous intervals covering the frame.
  const std::int64_t step = c.step_seconds;
  auto ts = [&](std::size_t row) { return c.start_epoch + static_cast<std::int64_t>(row) * step; };
  std::size_t cursor = 0;
  for (const auto& w : s.anomaly_rows) {
    if (w.begin > cursor) s.noc.intervals.push_back({ts(cursor), ts(w.begin), data::OperatingState::normal});
    s.noc.intervals.push_back({ts(w.begin), ts(w.end), data::OperatingState::anomalous});
    cursor = w.end;
  }
  if (cursor < n) s.noc.intervals.push_back({ts(cursor), ts(n), data::OperatingState::normal});

  nlohmann::json channels = nlohmann::json::array();
  for (std::size_t ch = 0; ch < m; ++ch)
    channels.push_back({{"name", s.frame.channels[ch]},
                        {"base", s.channel_base[ch]},
                        {"scale", s.channel_scale[ch]},
                        {"true_changepoints", s.true_cps[ch]},
                        {"affected", direction[ch] != 0.0},
                        {"direction", direction[ch]}});
  nlohmann::json windows = nlohmann::json::array();
  std::size_t anomalous = 0;
  for (const auto& w : s.anomaly_rows) {
    windows.push_back({{"begin_row", w.begin}, {"end_row", w.end}, {"start", ts(w.begin)}, {"end", ts(w.end)}});
    anomalous += w.size();
  }
  s.manifest = {{"format", "segad-scenario"},
                {"version", 1},
                {"seed", seed},
                {"config", config_json(c)},
                {"rows", n},
                {"anomalous_rows", anomalous},
                {"anomaly_windows", windows},
                {"affected_channels", s.affected_channels},
                {"channels", channels}};
  return s;
}

std::vector<double> step_series(std::size_t n, const std::vector<std::size_t>& shifts, double shift_sigma,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out(n);
  double level = 0.0;
  std::size_t next = 0;
  for (std::size_t t = 0; t < n; ++t) {
    while (next < shifts.size() && shifts[next] == t) {
      level += (next % 2 == 0 ? 1.0 : -1.0) * shift_sigma;
      ++next;
    }
    out[t] = level + gauss(rng);
  }
  return out;
}

nlohmann::json config_json(const ScenarioConfig& c) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : c.anomalies) windows.push_back({{"start_fraction", w.start_fraction}, {"length_fraction", w.length_fraction}});
  return {{"n_channels", c.n_channels},
          {"n_rows", c.n_rows},
          {"step_seconds", c.step_seconds},
          {"start_epoch", c.start_epoch},
          {"regime_changes", c.regime_changes},
          {"jump_sigma", c.jump_sigma},
          {"ar_min", c.ar_min},
          {"ar_max", c.ar_max},
          {"noise_sigma", c.noise_sigma},
          {"min_gap", c.min_gap},
          {"anomalies", windows},
          {"affected_fraction", c.affected_fraction},
          {"onset_sigma", c.onset_sigma},
          {"drift_sigma", c.drift_sigma},
          {"variance_inflation", c.variance_inflation}};
}

}  // namespace segad::synthgen
