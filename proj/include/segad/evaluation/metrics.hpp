#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "segad/data/labels.hpp"

namespace segad::evaluation {

// Mann-Whitney statistic, ties counted one half. nullopt unless both classes
// are present.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// sum (R_i - R_{i-1}) P_i over descending thresholds, tied scores taken as
// one block. nullopt without positives.
std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
};

// Predicted positive when score >= tau. Zero denominators give 0.
Prf prf_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double tau);

struct ThresholdChoice {
  double tau = 0.0;
  double f1 = 0.0;
};

// Best F1 over every distinct score as threshold; ties go to the smallest
// threshold. nullopt when labels are single-class.
std::optional<ThresholdChoice> optimal_f1_threshold(std::span<const double> scores,
                                                    std::span<const std::uint8_t> labels);

struct Coverage {
  std::size_t detected = 0;
  std::size_t total = 0;
  double percent = 0.0;  // NaN when total is 0
};

// Flagged steps inside the intervals over all interval steps.
Coverage etp(std::span<const std::uint8_t> predictions, std::span<const data::RowRange> intervals);

// Mean steps from interval start to the first flag inside it, over detected
// intervals; NaN when none is detected.
double ttd(std::span<const std::uint8_t> predictions, std::span<const data::RowRange> intervals);

// Fraction of intervals with at least one flag; NaN without intervals.
double event_detection_rate(std::span<const std::uint8_t> predictions,
                            std::span<const data::RowRange> intervals);

std::vector<std::uint8_t> apply_threshold(std::span<const double> scores, double tau);

}  // namespace segad::evaluation
