#include "segad/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "segad/common/error.hpp"

namespace segad::evaluation {

namespace {

void check(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw RejectedInput("scores and labels differ in length");
  for (double s : scores)
    if (std::isnan(s)) throw RejectedInput("scores contain NaN");
}

std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check(scores, labels);
  const auto idx = order_desc(scores);
  // Walk tie blocks from the top; each positive beats every negative below
  // its block and half-beats the negatives inside it.
  double pos_total = 0.0, neg_total = 0.0;
  for (auto l : labels) (l ? pos_total : neg_total) += 1.0;
  if (pos_total == 0.0 || neg_total == 0.0) return std::nullopt;
  double wins = 0.0, neg_seen = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double p = 0.0, n = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? p : n) += 1.0;
      ++j;
    }
    wins += p * (neg_total - neg_seen - n) + 0.5 * p * n;
    neg_seen += n;
    i = j;
  }
  return wins / (pos_total * neg_total);
}

std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels) {
  check(scores, labels);
  double pos_total = 0.0;
  for (auto l : labels) pos_total += l ? 1.0 : 0.0;
  if (pos_total == 0.0) return std::nullopt;
  const auto idx = order_desc(scores);
  double tp = 0.0, seen = 0.0, ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]] ? 1.0 : 0.0;
      seen += 1.0;
      ++j;
    }
    const double recall = tp / pos_total;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

Prf prf_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double tau) {
  check(scores, labels);
  Prf r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= tau;
    if (labels[i]) (pred ? r.confusion.tp : r.confusion.fn)++;
    else (pred ? r.confusion.fp : r.confusion.tn)++;
  }
  const auto tp = static_cast<double>(r.confusion.tp);
  const auto pp = static_cast<double>(r.confusion.tp + r.confusion.fp);
  const auto ap = static_cast<double>(r.confusion.tp + r.confusion.fn);
  r.precision = pp > 0.0 ? tp / pp : 0.0;
  r.recall = ap > 0.0 ? tp / ap : 0.0;
  // Same value as 2PR / (P + R), written on counts so it matches the
  // threshold scan exactly.
  r.f1 = tp > 0.0 ? 2.0 * tp / (pp + ap) : 0.0;
  return r;
}

std::optional<ThresholdChoice> optimal_f1_threshold(std::span<const double> scores,
                                                    std::span<const std::uint8_t> labels) {
  check(scores, labels);
  std::size_t pos_total = 0;
  for (auto l : labels) pos_total += l ? 1 : 0;
  if (pos_total == 0 || pos_total == labels.size()) return std::nullopt;
  const auto idx = order_desc(scores);
  // Sweep thresholds from high to low; a later (smaller) threshold replaces
  // the best only when it is at least as good, so ties pick the smallest.
  // F1 = 2tp / (tp + fp + pos_total) is compared as an exact fraction so that
  // equal F1 values at different thresholds really tie.
  std::size_t tp = 0, fp = 0;
  std::size_t best_num = 0, best_den = 1;
  double best_tau = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp)++;
      ++j;
    }
    const std::size_t num = 2 * tp, den = tp + fp + pos_total;
    if (static_cast<unsigned __int128>(num) * best_den >= static_cast<unsigned __int128>(best_num) * den) {
      best_num = num;
      best_den = den;
      best_tau = scores[idx[i]];
    }
    i = j;
  }
  return ThresholdChoice{best_tau, static_cast<double>(best_num) / static_cast<double>(best_den)};
}

namespace {

void check_intervals(std::size_t n, std::span<const data::RowRange> intervals) {
  for (const auto& iv : intervals)
    if (iv.begin > iv.end || iv.end > n) throw RejectedInput("interval lies outside the prediction range");
}

}  // namespace

Coverage etp(std::span<const std::uint8_t> predictions, std::span<const data::RowRange> intervals) {
  check_intervals(predictions.size(), intervals);
  Coverage c;
  for (const auto& iv : intervals)
    for (std::size_t t = iv.begin; t < iv.end; ++t) {
      ++c.total;
      c.detected += predictions[t] ? 1 : 0;
    }
  c.percent = c.total ? 100.0 * static_cast<double>(c.detected) / static_cast<double>(c.total)
                      : std::numeric_limits<double>::quiet_NaN();
  return c;
}

double ttd(std::span<const std::uint8_t> predictions, std::span<const data::RowRange> intervals) {
  check_intervals(predictions.size(), intervals);
  double sum = 0.0;
  std::size_t hit = 0;
  for (const auto& iv : intervals)
    for (std::size_t t = iv.begin; t < iv.end; ++t)
      if (predictions[t]) {
        sum += static_cast<double>(t - iv.begin);
        ++hit;
        break;
      }
  return hit ? sum / static_cast<double>(hit) : std::numeric_limits<double>::quiet_NaN();
}

double event_detection_rate(std::span<const std::uint8_t> predictions,
                            std::span<const data::RowRange> intervals) {
  check_intervals(predictions.size(), intervals);
  if (intervals.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hit = 0;
  for (const auto& iv : intervals)
    hit += std::any_of(predictions.begin() + static_cast<std::ptrdiff_t>(iv.begin),
                       predictions.begin() + static_cast<std::ptrdiff_t>(iv.end),
                       [](std::uint8_t p) { return p != 0; })
               ? 1
               : 0;
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

std::vector<std::uint8_t> apply_threshold(std::span<const double> scores, double tau) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= tau ? 1 : 0;
  return out;
}

}  // namespace segad::evaluation
