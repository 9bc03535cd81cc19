#include "segad/evaluation/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "segad/common/error.hpp"
#include "segad/common/text.hpp"
#include "segad/detectors/model.hpp"

namespace segad::evaluation {

using nlohmann::json;

std::string to_string(const ThresholdRule& rule) {
  switch (rule.kind) {
    case ThresholdKind::f1_optimal: return "f1-optimal";
    case ThresholdKind::quantile: return "quantile:" + format_double(rule.value);
    case ThresholdKind::fixed: return "fixed:" + format_double(rule.value);
  }
  return "unknown";
}

std::optional<ThresholdRule> parse_threshold_rule(std::string_view text) {
  if (text == "f1-optimal") return ThresholdRule{};
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto head = text.substr(0, colon);
  const auto v = parse_double(text.substr(colon + 1));
  if (!v || !std::isfinite(*v)) return std::nullopt;
  if (head == "quantile" && *v > 0.0 && *v < 1.0) return ThresholdRule{ThresholdKind::quantile, *v};
  if (head == "fixed") return ThresholdRule{ThresholdKind::fixed, *v};
  return std::nullopt;
}

double resolve_threshold(const ThresholdRule& rule, std::span<const double> scores,
                         std::span<const std::uint8_t> labels, std::span<const double> reference) {
  switch (rule.kind) {
    case ThresholdKind::fixed: return rule.value;
    case ThresholdKind::quantile: {
      const auto ref = reference.empty() ? scores : reference;
      if (ref.empty()) throw RejectedInput("quantile threshold needs scores");
      return detectors::quantile({ref.begin(), ref.end()}, 1.0 - rule.value);
    }
    case ThresholdKind::f1_optimal: {
      const auto best = optimal_f1_threshold(scores, labels);
      if (!best) throw RejectedInput("f1-optimal threshold needs both classes in the evaluated rows");
      return best->tau;
    }
  }
  throw RejectedInput("unknown threshold rule");
}

namespace {

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }
bool same(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || same(*a, *b));
}

}  // namespace

bool operator==(const EvalReport& a, const EvalReport& b) {
  return a.schema_version == b.schema_version && a.model == b.model && a.rows == b.rows &&
         a.positives == b.positives && same(a.auc_roc, b.auc_roc) &&
         same(a.average_precision, b.average_precision) && same(a.threshold, b.threshold) &&
         a.threshold_rule == b.threshold_rule && same(a.precision, b.precision) &&
         same(a.recall, b.recall) && same(a.f1, b.f1) && a.confusion == b.confusion &&
         a.etp.detected == b.etp.detected && a.etp.total == b.etp.total &&
         same(a.etp.percent, b.etp.percent) && same(a.ttd_mean, b.ttd_mean) &&
         same(a.ttd_seconds, b.ttd_seconds) && same(a.event_detection_rate, b.event_detection_rate) &&
         a.intervals == b.intervals;
}

EvalReport assemble_report(std::string model, std::span<const double> scores,
                           std::span<const std::uint8_t> labels,
                           std::span<const data::RowRange> intervals, double threshold,
                           std::string threshold_rule, double step_seconds) {
  EvalReport r;
  r.model = std::move(model);
  r.rows = scores.size();
  for (auto l : labels) r.positives += l ? 1 : 0;
  r.auc_roc = roc_auc(scores, labels);
  r.average_precision = average_precision(scores, labels);
  r.threshold = threshold;
  r.threshold_rule = std::move(threshold_rule);
  const Prf prf = prf_at_threshold(scores, labels, threshold);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.confusion = prf.confusion;
  const auto flags = apply_threshold(scores, threshold);
  r.etp = etp(flags, intervals);
  r.ttd_mean = ttd(flags, intervals);
  r.ttd_seconds = r.ttd_mean * step_seconds;
  r.event_detection_rate = event_detection_rate(flags, intervals);
  r.intervals = intervals.size();
  return r;
}

std::string format_percent(double percent) {
  if (std::isnan(percent)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", percent);
  return buf;
}

std::string format_coverage(const Coverage& c) {
  return std::to_string(c.detected) + "/" + std::to_string(c.total) + " (" + format_percent(c.percent) + ")";
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

double get_num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::optional<double> get_opt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

json report_json(const EvalReport& r) {
  return {{"schema_version", r.schema_version},
          {"model", r.model},
          {"rows", r.rows},
          {"positives", r.positives},
          {"auc_roc", num(r.auc_roc)},
          {"average_precision", num(r.average_precision)},
          {"threshold", num(r.threshold)},
          {"threshold_rule", r.threshold_rule},
          {"precision", num(r.precision)},
          {"recall", num(r.recall)},
          {"f1", num(r.f1)},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
          {"etp",
           {{"detected", r.etp.detected},
            {"total", r.etp.total},
            {"percent", num(r.etp.percent)},
            {"display", format_coverage(r.etp)}}},
          {"ttd_mean_steps", num(r.ttd_mean)},
          {"ttd_mean_seconds", num(r.ttd_seconds)},
          {"event_detection_rate", num(r.event_detection_rate)},
          {"intervals", r.intervals}};
}

EvalReport report_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw SchemaMismatch("evaluation report is not a JSON object");
    const int version = doc.at("schema_version").get<int>();
    if (version != kReportSchemaVersion)
      throw SchemaMismatch("evaluation report schema " + std::to_string(version) + " is not supported");
    EvalReport r;
    r.model = doc.at("model").get<std::string>();
    r.rows = doc.at("rows").get<std::size_t>();
    r.positives = doc.at("positives").get<std::size_t>();
    r.auc_roc = get_opt(doc.at("auc_roc"));
    r.average_precision = get_opt(doc.at("average_precision"));
    r.threshold = get_num(doc.at("threshold"));
    r.threshold_rule = doc.at("threshold_rule").get<std::string>();
    r.precision = get_num(doc.at("precision"));
    r.recall = get_num(doc.at("recall"));
    r.f1 = get_num(doc.at("f1"));
    const auto& c = doc.at("confusion");
    r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                   c.at("fn").get<std::size_t>()};
    const auto& e = doc.at("etp");
    r.etp = {e.at("detected").get<std::size_t>(), e.at("total").get<std::size_t>(), get_num(e.at("percent"))};
    r.ttd_mean = get_num(doc.at("ttd_mean_steps"));
    r.ttd_seconds = get_num(doc.at("ttd_mean_seconds"));
    r.event_detection_rate = get_num(doc.at("event_detection_rate"));
    r.intervals = doc.at("intervals").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string report_csv(const EvalReport& r) {
  auto cell = [](double v) { return std::isnan(v) ? std::string("NaN") : format_double(v); };
  auto opt = [&](const std::optional<double>& v) { return v ? cell(*v) : std::string("NaN"); };
  std::string out =
      "model,rows,positives,auc_roc,average_precision,threshold,threshold_rule,precision,recall,f1,"
      "tp,fp,tn,fn,etp_detected,etp_total,etp_percent,ttd_mean_steps,ttd_mean_seconds,"
      "event_detection_rate,intervals\n";
  out += r.model + "," + std::to_string(r.rows) + "," + std::to_string(r.positives) + "," + opt(r.auc_roc) +
         "," + opt(r.average_precision) + "," + cell(r.threshold) + "," + r.threshold_rule + "," +
         cell(r.precision) + "," + cell(r.recall) + "," + cell(r.f1) + "," + std::to_string(r.confusion.tp) +
         "," + std::to_string(r.confusion.fp) + "," + std::to_string(r.confusion.tn) + "," +
         std::to_string(r.confusion.fn) + "," + std::to_string(r.etp.detected) + "," +
         std::to_string(r.etp.total) + "," + cell(r.etp.percent) + "," + cell(r.ttd_mean) + "," +
         cell(r.ttd_seconds) + "," + cell(r.event_detection_rate) + "," + std::to_string(r.intervals) + "\n";
  return out;
}

std::string pretty_report(const EvalReport& r) {
  auto fixed = [](double v, int digits) {
    if (std::isnan(v)) return std::string("nan");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  std::string out;
  out += "Model: " + r.model + "\n";
  out += "AUC-ROC: " + (r.auc_roc ? fixed(*r.auc_roc, 4) : std::string("undefined")) + "\n";
  out += "Avg Precision: " + (r.average_precision ? fixed(*r.average_precision, 4) : std::string("undefined")) + "\n";
  out += "Threshold: " + fixed(r.threshold, 4) + " (" + r.threshold_rule + ")\n";
  out += "Precision: " + fixed(r.precision, 4) + "  Recall: " + fixed(r.recall, 4) + "  F1: " + fixed(r.f1, 4) + "\n";
  out += "ETP: " + format_coverage(r.etp) + "\n";
  out += "TTD (mean steps): " + fixed(r.ttd_mean, 2) + "\n";
  out += "Event detection rate: " + fixed(r.event_detection_rate, 4) + "\n";
  return out;
}

}  // namespace segad::evaluation
