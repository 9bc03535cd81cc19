#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "segad/evaluation/metrics.hpp"

namespace segad::evaluation {

enum class ThresholdKind { f1_optimal, quantile, fixed };

// "f1-optimal", "quantile:<expected anomaly rate>" or "fixed:<tau>".
struct ThresholdRule {
  ThresholdKind kind = ThresholdKind::f1_optimal;
  double value = 0.0;
};

std::string to_string(const ThresholdRule& rule);
std::optional<ThresholdRule> parse_threshold_rule(std::string_view text);

// f1-optimal searches the evaluated scores; quantile takes the
// (1 - rate) quantile of the reference scores (the evaluated scores when no
// reference is given). Throws RejectedInput when the rule cannot apply.
double resolve_threshold(const ThresholdRule& rule, std::span<const double> scores,
                         std::span<const std::uint8_t> labels, std::span<const double> reference = {});

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  std::string model;
  std::size_t rows = 0;
  std::size_t positives = 0;
  std::optional<double> auc_roc;
  std::optional<double> average_precision;
  double threshold = 0.0;
  std::string threshold_rule;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
  Coverage etp;
  double ttd_mean = 0.0;     // steps; NaN when nothing was detected
  double ttd_seconds = 0.0;  // ttd_mean * step
  double event_detection_rate = 0.0;
  std::size_t intervals = 0;

  // NaN fields compare equal to NaN.
  friend bool operator==(const EvalReport& a, const EvalReport& b);
};

EvalReport assemble_report(std::string model, std::span<const double> scores,
                           std::span<const std::uint8_t> labels,
                           std::span<const data::RowRange> intervals, double threshold,
                           std::string threshold_rule, double step_seconds);

// Two decimals with a percent sign ("91.96%"); "NaN" for NaN.
std::string format_percent(double percent);
// "309/336 (91.96%)"
std::string format_coverage(const Coverage& c);

// NaN and undefined values are written as null.
nlohmann::json report_json(const EvalReport& report);
// Throws SchemaMismatch on a missing field or another schema version.
EvalReport report_from_json(const nlohmann::json& doc);

std::string report_csv(const EvalReport& report);
std::string pretty_report(const EvalReport& report);

}  // namespace segad::evaluation
