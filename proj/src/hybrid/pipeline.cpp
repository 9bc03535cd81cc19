#include "segad/hybrid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "segad/common/error.hpp"
#include "segad/common/random.hpp"
#include "segad/common/text.hpp"
#include "segad/evaluation/metrics.hpp"

namespace segad::hybrid {

using detectors::ModelKind;
using nlohmann::json;

std::string_view to_string(FeedMode mode) { return mode == FeedMode::augment ? "augment" : "replace"; }

namespace {

int stage_rank(ModelKind k) {
  switch (k) {
    case ModelKind::pca: return 0;
    case ModelKind::ocsvm:
    case ModelKind::iforest: return 1;
    case ModelKind::rf:
    case ModelKind::gbt:
    case ModelKind::ensemble: return 2;
    case ModelKind::kmeans_det: return -1;
  }
  return -1;
}

}  // namespace

void validate(const PipelineSpec& spec) {
  if (spec.stages.empty()) throw RejectedInput("pipeline '" + spec.name + "' has no stages");
  int prev = -1;
  for (ModelKind k : spec.stages) {
    const int r = stage_rank(k);
    if (r < 0)
      throw RejectedInput("pipeline '" + spec.name + "': " + std::string(detectors::to_string(k)) +
                          " cannot be a pipeline stage");
    if (r <= prev)
      throw RejectedInput("pipeline '" + spec.name +
                          "': stages must be ordered reducer, one-class, supervised with at most one of each");
    prev = r;
  }
  if (prev == 0) throw RejectedInput("pipeline '" + spec.name + "': a reducer cannot be the final stage");
}

std::vector<std::string> named_spec_names() {
  return {"baseline", "cp-features-all", "cp-features-top3", "pca+ocsvm", "ocsvm+rf",
          "pca+gbt",  "ocsvm+gbt",       "clustering-delta-f", "top10"};
}

std::optional<PipelineSpec> named_spec(std::string_view name, const detectors::DetectorParams& params) {
  PipelineSpec s;
  s.name = std::string(name);
  s.params = params;
  const std::vector<std::string> base{"@raw", "@segment"};
  if (name == "baseline") {
    s.stages = {ModelKind::ensemble};
    s.features = base;
  } else if (name == "cp-features-all") {
    s.stages = {ModelKind::ensemble};
    s.features = {"@raw", "@segment", "@cp_feature"};
  } else if (name == "cp-features-top3") {
    s.stages = {ModelKind::ensemble};
    s.features = {"@raw", "@segment", "@cp_feature"};
    s.top_k = 3;
    s.top_k_scope = {data::ColumnOrigin::cp_feature};
  } else if (name == "pca+ocsvm") {
    s.stages = {ModelKind::pca, ModelKind::ocsvm};
    s.features = base;
  } else if (name == "ocsvm+rf") {
    s.stages = {ModelKind::ocsvm, ModelKind::rf};
    s.mode = FeedMode::augment;
    s.features = base;
  } else if (name == "pca+gbt") {
    s.stages = {ModelKind::pca, ModelKind::gbt};
    s.features = base;
  } else if (name == "ocsvm+gbt") {
    s.stages = {ModelKind::ocsvm, ModelKind::gbt};
    s.mode = FeedMode::augment;
    s.features = base;
  } else if (name == "clustering-delta-f") {
    s.stages = {ModelKind::ensemble};
    s.features = {"@raw", "@segment", "@cluster", "@delta_f"};
  } else if (name == "top10") {
    s.stages = {ModelKind::ensemble};
    s.top_k = 10;
  } else {
    return std::nullopt;
  }
  return s;
}

PipelineSpec parse_spec(std::string_view text, const detectors::DetectorParams& params) {
  if (auto s = named_spec(text, params)) return *s;
  PipelineSpec s;
  s.name = std::string(text);
  s.params = params;
  std::string_view body = text;
  if (const auto at = text.find('@'); at != std::string_view::npos) {
    const auto mode = text.substr(at + 1);
    if (mode == "augment") s.mode = FeedMode::augment;
    else if (mode != "replace") throw RejectedInput("unknown feed mode '" + std::string(mode) + "'");
    body = text.substr(0, at);
  }
  for (const auto& part : split(body, '+')) {
    const auto kind = detectors::parse_model_kind(trim(part));
    if (!kind) throw RejectedInput("unknown pipeline '" + std::string(text) + "'");
    s.stages.push_back(*kind);
  }
  validate(s);
  return s;
}

std::size_t temporal_cut(std::size_t rows, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw RejectedInput("train_fraction must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(rows)));
}

namespace {

struct Features {
  Matrix x;
  std::vector<std::string> names;
};

Features stage_output(const detectors::ModelArtifact& art, const Matrix& x) {
  Features f;
  if (art.kind == ModelKind::pca) {
    const auto& m = std::get<detectors::PcaModel>(art.model);
    f.x = detectors::pca_transform(m, x);
    for (std::size_t c = 0; c < f.x.cols(); ++c) f.names.push_back("pc" + std::to_string(c + 1));
  } else {
    const auto s = detectors::score(art, x);
    f.x = Matrix::from_columns({s});
    f.names = {std::string(detectors::to_string(art.kind)) + "_score"};
  }
  return f;
}

Features feed(FeedMode mode, Features current, Features out) {
  if (mode == FeedMode::replace) return out;
  current.x = Matrix::hstack(current.x, out.x);
  current.names.insert(current.names.end(), out.names.begin(), out.names.end());
  return current;
}

std::vector<std::size_t> resolve_columns(const data::LabeledDataset& d, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto i = d.find(n);
    if (!i) throw RejectedInput("dataset lacks pipeline feature '" + n + "'");
    idx.push_back(*i);
  }
  return idx;
}

}  // namespace

Pipeline train_pipeline(const PipelineSpec& spec, const data::LabeledDataset& dataset,
                        std::size_t train_rows, std::uint64_t seed, Diagnostics* diag) {
  validate(spec);
  const std::size_t n = train_rows == 0 ? dataset.rows() : train_rows;
  if (n > dataset.rows()) throw RejectedInput("train_rows exceeds the dataset");
  Pipeline p;
  p.spec = spec;
  p.train_rows = n;
  p.seed = seed;

  std::vector<std::size_t> cols;
  if (spec.features.empty()) {
    cols.resize(dataset.cols());
    std::iota(cols.begin(), cols.end(), 0);
  } else {
    cols = data::match_columns(dataset, spec.features);
  }
  if (cols.empty()) throw RejectedInput("pipeline '" + spec.name + "' selects no columns");
  const std::vector<std::uint8_t> y(dataset.labels.begin(), dataset.labels.begin() + static_cast<std::ptrdiff_t>(n));

  if (spec.top_k > 0) {
    const Matrix x = dataset.matrix(cols, 0, n);
    const auto rf = detectors::train_random_forest(x, y, spec.params.rf, derive_seed(seed, 0x70b));
    std::vector<std::size_t> scoped;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto origin = dataset.columns[cols[i]].origin;
      if (spec.top_k_scope.empty() ||
          std::find(spec.top_k_scope.begin(), spec.top_k_scope.end(), origin) != spec.top_k_scope.end())
        scoped.push_back(i);
    }
    std::stable_sort(scoped.begin(), scoped.end(),
                     [&](std::size_t a, std::size_t b) { return rf.importances[a] > rf.importances[b]; });
    if (scoped.size() > spec.top_k) scoped.resize(spec.top_k);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto origin = dataset.columns[cols[i]].origin;
      const bool in_scope = spec.top_k_scope.empty() ||
                            std::find(spec.top_k_scope.begin(), spec.top_k_scope.end(), origin) != spec.top_k_scope.end();
      if (!in_scope || std::find(scoped.begin(), scoped.end(), i) != scoped.end()) kept.push_back(cols[i]);
    }
    cols = std::move(kept);
  }
  for (std::size_t c : cols) p.input_features.push_back(dataset.columns[c].name);

  Features cur{dataset.matrix(cols, 0, n), p.input_features};
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < n; ++i)
    if (!y[i]) normal.push_back(i);

  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    const ModelKind kind = spec.stages[s];
    const std::uint64_t stage_seed = derive_seed(seed, s);
    const bool last = s + 1 == spec.stages.size();
    detectors::ModelArtifact art;
    if (kind == ModelKind::ocsvm || kind == ModelKind::iforest) {
      if (normal.empty()) throw RejectedInput("pipeline '" + spec.name + "': no normal training rows");
      art = detectors::train_model(kind, cur.x.select_rows(normal), {}, cur.names, spec.params, stage_seed, diag);
    } else {
      art = detectors::train_model(kind, cur.x, y, cur.names, spec.params, stage_seed, diag);
    }
    if (!last) cur = feed(spec.mode, cur, stage_output(art, cur.x));
    p.stages.push_back(std::move(art));
  }
  return p;
}

std::vector<double> score_matrix(const Pipeline& p, const Matrix& x) {
  if (x.cols() != p.input_features.size())
    throw RejectedInput("pipeline expects " + std::to_string(p.input_features.size()) + " columns, got " +
                        std::to_string(x.cols()));
  Features cur{x, p.input_features};
  for (std::size_t s = 0; s < p.stages.size(); ++s) {
    if (s + 1 == p.stages.size()) return detectors::score(p.stages[s], cur.x);
    cur = feed(p.spec.mode, cur, stage_output(p.stages[s], cur.x));
  }
  throw RejectedInput("pipeline has no stages");
}

std::vector<double> score_pipeline(const Pipeline& p, const data::LabeledDataset& dataset, std::size_t begin,
                                   std::size_t end) {
  end = std::min(end, dataset.rows());
  if (begin > end) throw RejectedInput("empty scoring range");
  return score_matrix(p, input_matrix(p, dataset, begin, end));
}

Matrix input_matrix(const Pipeline& p, const data::LabeledDataset& dataset, std::size_t begin, std::size_t end) {
  end = std::min(end, dataset.rows());
  if (begin > end) throw RejectedInput("empty row range");
  return dataset.matrix(resolve_columns(dataset, p.input_features), begin, end);
}

json pipeline_json(const Pipeline& p) {
  json stages = json::array();
  for (const auto& a : p.stages) stages.push_back(detectors::to_json(a));
  std::vector<std::string> kinds, scope;
  for (auto k : p.spec.stages) kinds.emplace_back(detectors::to_string(k));
  for (auto o : p.spec.top_k_scope) scope.emplace_back(data::to_string(o));
  return {{"format", "segad-pipeline"},
          {"version", kPipelineFormatVersion},
          {"spec",
           {{"name", p.spec.name},
            {"stages", kinds},
            {"mode", to_string(p.spec.mode)},
            {"features", p.spec.features},
            {"top_k", p.spec.top_k},
            {"top_k_scope", scope}}},
          {"input_features", p.input_features},
          {"train_rows", p.train_rows},
          {"seed", p.seed},
          {"stages", stages}};
}

Pipeline pipeline_from_json(const json& doc) {
  try {
    if (!doc.is_object() || doc.value("format", "") != "segad-pipeline")
      throw SchemaMismatch("not a segad pipeline artifact");
    if (doc.at("version").get<int>() != kPipelineFormatVersion)
      throw SchemaMismatch("pipeline artifact version " + doc.at("version").dump() + " is not supported");
    Pipeline p;
    const auto& s = doc.at("spec");
    p.spec.name = s.at("name").get<std::string>();
    for (const auto& k : s.at("stages")) {
      auto kind = detectors::parse_model_kind(k.get<std::string>());
      if (!kind) throw SchemaMismatch("unknown stage kind " + k.dump());
      p.spec.stages.push_back(*kind);
    }
    const auto mode = s.at("mode").get<std::string>();
    if (mode != "replace" && mode != "augment") throw SchemaMismatch("unknown feed mode " + mode);
    p.spec.mode = mode == "augment" ? FeedMode::augment : FeedMode::replace;
    p.spec.features = s.at("features").get<std::vector<std::string>>();
    p.spec.top_k = s.at("top_k").get<std::size_t>();
    for (const auto& o : s.at("top_k_scope")) {
      auto origin = data::parse_origin(o.get<std::string>());
      if (!origin) throw SchemaMismatch("unknown column origin " + o.dump());
      p.spec.top_k_scope.push_back(*origin);
    }
    p.input_features = doc.at("input_features").get<std::vector<std::string>>();
    p.train_rows = doc.at("train_rows").get<std::size_t>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& a : doc.at("stages")) p.stages.push_back(detectors::artifact_from_json(a));
    if (p.stages.size() != p.spec.stages.size()) throw SchemaMismatch("pipeline stage count mismatch");
    for (std::size_t i = 0; i < p.stages.size(); ++i)
      if (p.stages[i].kind != p.spec.stages[i]) throw SchemaMismatch("pipeline stage kind mismatch");
    validate(p.spec);
    return p;
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("malformed pipeline artifact: ") + e.what());
  }
}

double f1_drop_percent(double reference_f1, double f1) {
  if (!(reference_f1 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double v = std::round(100.0 * (reference_f1 - f1) / reference_f1);
  return v == 0.0 ? 0.0 : v;
}

std::vector<ComparisonRow> run_comparison(const data::LabeledDataset& dataset,
                                          const std::vector<PipelineSpec>& specs,
                                          const ComparisonConfig& config, Diagnostics* diag) {
  if (specs.empty()) throw RejectedInput("comparison needs at least one pipeline spec");
  const std::size_t cut = temporal_cut(dataset.rows(), config.train_fraction);
  if (cut == 0 || cut >= dataset.rows()) throw RejectedInput("temporal split leaves an empty period");
  const std::span<const std::uint8_t> test_labels(dataset.labels.data() + cut, dataset.rows() - cut);

  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Pipeline p = train_pipeline(specs[i], dataset, cut, config.seed, diag);
    const auto test = score_pipeline(p, dataset, cut, dataset.rows());
    std::vector<double> reference;
    if (config.threshold.kind == evaluation::ThresholdKind::quantile) reference = score_pipeline(p, dataset, 0, cut);
    ComparisonRow row;
    row.approach = specs[i].name;
    row.auc_roc = evaluation::roc_auc(test, test_labels);
    row.threshold = evaluation::resolve_threshold(config.threshold, test, test_labels, reference);
    row.f1 = evaluation::prf_at_threshold(test, test_labels, row.threshold).f1;
    rows.push_back(row);
  }
  for (auto& r : rows) r.f1_drop_pct = f1_drop_percent(rows.front().f1, r.f1);
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  std::string out = "approach,auc_roc,f1,f1_drop_pct\n";
  for (const auto& r : rows)
    out += r.approach + "," + (r.auc_roc ? cell(*r.auc_roc) : std::string()) + "," + cell(r.f1) + "," +
           cell(r.f1_drop_pct) + "\n";
  return out;
}

json comparison_json(const std::vector<ComparisonRow>& rows) {
  json out = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& r : rows)
    out.push_back({{"approach", r.approach},
                   {"auc_roc", r.auc_roc ? num(*r.auc_roc) : json(nullptr)},
                   {"f1", num(r.f1)},
                   {"threshold", num(r.threshold)},
                   {"f1_drop_pct", num(r.f1_drop_pct)}});
  return {{"schema_version", 1}, {"rows", out}};
}

}  // namespace segad::hybrid
