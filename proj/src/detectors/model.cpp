#include "segad/detectors/model.hpp"

#include <algorithm>
#include <cmath>

#include "segad/common/error.hpp"

namespace segad::detectors {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::rf: return "rf";
    case ModelKind::gbt: return "gbt";
    case ModelKind::ensemble: return "ensemble";
    case ModelKind::iforest: return "iforest";
    case ModelKind::ocsvm: return "ocsvm";
    case ModelKind::pca: return "pca";
    case ModelKind::kmeans_det: return "kmeans-det";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::rf, ModelKind::gbt, ModelKind::ensemble, ModelKind::iforest,
                      ModelKind::ocsvm, ModelKind::pca, ModelKind::kmeans_det})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

bool is_supervised(ModelKind kind) {
  return kind == ModelKind::rf || kind == ModelKind::gbt || kind == ModelKind::ensemble;
}

namespace {

json rf_params(const RandomForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"max_features", p.max_features},
          {"min_leaf", p.min_leaf},
          {"class_weighting", p.class_weighting == ClassWeighting::balanced ? "balanced" : "none"},
          {"max_bins", p.max_bins}};
}

json gbt_params(const GradientBoostingParams& p) {
  return {{"n_rounds", p.n_rounds}, {"learning_rate", p.learning_rate}, {"max_depth", p.max_depth},
          {"min_leaf", p.min_leaf}, {"l2", p.l2},                       {"subsample", p.subsample},
          {"max_bins", p.max_bins}};
}

}  // namespace

json params_json(ModelKind kind, const DetectorParams& p) {
  switch (kind) {
    case ModelKind::rf: return rf_params(p.rf);
    case ModelKind::gbt: return gbt_params(p.gbt);
    case ModelKind::ensemble:
      return {{"rf", rf_params(p.rf)}, {"gbt", gbt_params(p.gbt)}, {"rf_weight", p.ensemble_rf_weight}};
    case ModelKind::iforest:
      return {{"n_trees", p.iforest.n_trees}, {"subsample_size", p.iforest.subsample_size}};
    case ModelKind::ocsvm:
      return {{"nu", p.ocsvm.nu},           {"gamma", p.ocsvm.gamma},
              {"tolerance", p.ocsvm.tolerance}, {"max_iter", p.ocsvm.max_iter},
              {"max_train", p.ocsvm.max_train}};
    case ModelKind::pca:
      return {{"variance_keep", p.pca.variance_keep}, {"standardize", p.pca.standardize}};
    case ModelKind::kmeans_det:
      return {{"k", p.kmeans.k}, {"standardize", p.kmeans.standardize}, {"max_iter", p.kmeans.max_iter}};
  }
  return json::object();
}

double quantile(std::vector<double> values, double level) {
  if (values.empty()) throw RejectedInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? values[lo] : values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

void finish(ModelArtifact& art, const Matrix& x, Diagnostics& local, Diagnostics* diag) {
  const auto s = score(art, x);
  for (double level : kQuantileLevels) art.score_quantiles.push_back(quantile(s, level));
  art.warnings = local.warnings;
  for (const auto& w : local.warnings) warn(diag, w);
}

void check_shape(const Matrix& x, const std::vector<std::string>& names) {
  if (x.cols() != names.size()) throw RejectedInput("feature name count does not match columns");
  if (x.rows() == 0) throw RejectedInput("empty training matrix");
}

}  // namespace

ModelArtifact train_model(ModelKind kind, const Matrix& x, std::span<const std::uint8_t> y,
                          std::vector<std::string> feature_names, const DetectorParams& params,
                          std::uint64_t seed, Diagnostics* diag) {
  if (kind == ModelKind::ensemble) return train_ensemble_rf_gbt(x, y, std::move(feature_names), params, seed, diag);
  check_shape(x, feature_names);
  ModelArtifact art;
  art.kind = kind;
  art.feature_names = std::move(feature_names);
  art.seed = seed;
  art.params = params_json(kind, params);
  Diagnostics local;
  switch (kind) {
    case ModelKind::rf: art.model = train_random_forest(x, y, params.rf, seed); break;
    case ModelKind::gbt: art.model = train_gradient_boosting(x, y, params.gbt, seed); break;
    case ModelKind::iforest: art.model = train_isolation_forest(x, params.iforest, seed, &local); break;
    case ModelKind::ocsvm: art.model = train_ocsvm(x, params.ocsvm, seed, &local); break;
    case ModelKind::pca: art.model = fit_pca(x, params.pca, &local); break;
    case ModelKind::kmeans_det: art.model = train_kmeans_detector(x, params.kmeans, seed, &local); break;
    case ModelKind::ensemble: break;
  }
  finish(art, x, local, diag);
  return art;
}

ModelArtifact train_ensemble_rf_gbt(const Matrix& x, std::span<const std::uint8_t> y,
                                    std::vector<std::string> feature_names,
                                    const DetectorParams& params, std::uint64_t seed,
                                    Diagnostics* diag) {
  check_shape(x, feature_names);
  if (!(params.ensemble_rf_weight >= 0.0 && params.ensemble_rf_weight <= 1.0))
    throw RejectedInput("ensemble: rf weight must lie in [0, 1]");
  ModelArtifact art;
  art.kind = ModelKind::ensemble;
  art.feature_names = std::move(feature_names);
  art.seed = seed;
  art.params = params_json(ModelKind::ensemble, params);
  EnsembleModel m;
  m.rf = train_random_forest(x, y, params.rf, derive_seed(seed, 1));
  m.gbt = train_gradient_boosting(x, y, params.gbt, derive_seed(seed, 2));
  m.rf_weight = params.ensemble_rf_weight;
  art.model = std::move(m);
  Diagnostics local;
  finish(art, x, local, diag);
  return art;
}

Matrix align_columns(const ModelArtifact& model, const Matrix& x, const std::vector<std::string>& names) {
  if (names.size() != x.cols()) throw RejectedInput("column name count does not match columns");
  std::vector<std::size_t> idx;
  for (const auto& f : model.feature_names) {
    auto it = std::find(names.begin(), names.end(), f);
    if (it == names.end()) throw RejectedInput("input lacks model feature '" + f + "'");
    idx.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  return x.select_cols(idx);
}

std::vector<double> predict_proba(const ModelArtifact& model, const Matrix& x) {
  if (x.cols() != model.feature_names.size())
    throw RejectedInput("input has " + std::to_string(x.cols()) + " columns; model expects " +
                        std::to_string(model.feature_names.size()));
  if (const auto* rf = std::get_if<RandomForest>(&model.model)) return predict_proba(*rf, x);
  if (const auto* gbt = std::get_if<GradientBoosting>(&model.model)) return predict_proba(*gbt, x);
  if (const auto* e = std::get_if<EnsembleModel>(&model.model)) {
    auto a = predict_proba(e->rf, x);
    const auto b = predict_proba(e->gbt, x);
    const double w = e->rf_weight;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = w * a[i] + (1.0 - w) * b[i];
    return a;
  }
  throw RejectedInput("predict_proba needs an rf, gbt or ensemble model, not " +
                      std::string(to_string(model.kind)));
}

std::vector<double> score(const ModelArtifact& model, const Matrix& x) {
  if (x.cols() != model.feature_names.size())
    throw RejectedInput("input has " + std::to_string(x.cols()) + " columns; model expects " +
                        std::to_string(model.feature_names.size()));
  if (is_supervised(model.kind)) return predict_proba(model, x);
  if (const auto* m = std::get_if<IsolationForest>(&model.model)) return score_iforest(*m, x);
  if (const auto* m = std::get_if<OneClassSvm>(&model.model)) return score_ocsvm(*m, x);
  if (const auto* m = std::get_if<PcaModel>(&model.model)) return score_pca_spe(*m, x);
  if (const auto* m = std::get_if<KMeansDetector>(&model.model)) return score_kmeans_distance(*m, x);
  throw RejectedInput("model artifact holds no trained model");
}

// --- serialization ---------------------------------------------------------

namespace {

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) throw SchemaMismatch("matrix payload size mismatch");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

json tree_json(const Tree& t) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, value;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from(const json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
    throw SchemaMismatch("tree arrays differ in length");
  Tree t;
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] >= 0 && (left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) ||
                            left[i] >= static_cast<int>(n) || right[i] >= static_cast<int>(n)))
      throw SchemaMismatch("tree child index out of range");
    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
  }
  if (t.nodes.empty()) throw SchemaMismatch("tree without nodes");
  return t;
}

json trees_json(const std::vector<Tree>& trees) {
  json out = json::array();
  for (const auto& t : trees) out.push_back(tree_json(t));
  return out;
}

std::vector<Tree> trees_from(const json& j) {
  std::vector<Tree> out;
  for (const auto& t : j) out.push_back(tree_from(t));
  return out;
}

json rf_json(const RandomForest& m) { return {{"trees", trees_json(m.trees)}, {"importances", m.importances}}; }
RandomForest rf_from(const json& j) {
  return {trees_from(j.at("trees")), j.at("importances").get<std::vector<double>>()};
}

json gbt_json(const GradientBoosting& m) {
  return {{"base_margin", m.base_margin}, {"trees", trees_json(m.trees)},
          {"loss_history", m.loss_history}, {"importances", m.importances}};
}
GradientBoosting gbt_from(const json& j) {
  GradientBoosting m;
  m.base_margin = j.at("base_margin").get<double>();
  m.trees = trees_from(j.at("trees"));
  m.loss_history = j.at("loss_history").get<std::vector<double>>();
  m.importances = j.at("importances").get<std::vector<double>>();
  return m;
}

json model_json(const ModelArtifact& a) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomForest>) {
          return rf_json(m);
        } else if constexpr (std::is_same_v<T, GradientBoosting>) {
          return gbt_json(m);
        } else if constexpr (std::is_same_v<T, EnsembleModel>) {
          return {{"rf", rf_json(m.rf)}, {"gbt", gbt_json(m.gbt)}, {"rf_weight", m.rf_weight}};
        } else if constexpr (std::is_same_v<T, IsolationForest>) {
          json trees = json::array();
          for (const auto& t : m.trees) {
            std::vector<int> feature, left, right;
            std::vector<double> split;
            std::vector<std::size_t> size;
            for (const auto& n : t.nodes) {
              feature.push_back(n.feature);
              split.push_back(n.split);
              left.push_back(n.left);
              right.push_back(n.right);
              size.push_back(n.size);
            }
            trees.push_back({{"feature", feature}, {"split", split}, {"left", left}, {"right", right}, {"size", size}});
          }
          return {{"subsample_size", m.subsample_size}, {"trees", trees}};
        } else if constexpr (std::is_same_v<T, OneClassSvm>) {
          return {{"gamma", m.gamma}, {"rho", m.rho}, {"support", matrix_json(m.support)}, {"alpha", m.alpha}};
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          return {{"kept_columns", m.kept_columns}, {"mean", m.mean},
                  {"scale", m.scale},               {"components", matrix_json(m.components)},
                  {"eigenvalues", m.eigenvalues},   {"explained", m.explained}};
        } else {
          return {{"scaler_mean", m.scaler.mean}, {"scaler_scale", m.scaler.scale},
                  {"centroids", matrix_json(m.centroids)}};
        }
      },
      a.model);
}

void model_from(ModelArtifact& a, const json& j) {
  switch (a.kind) {
    case ModelKind::rf: a.model = rf_from(j); break;
    case ModelKind::gbt: a.model = gbt_from(j); break;
    case ModelKind::ensemble:
      a.model = EnsembleModel{rf_from(j.at("rf")), gbt_from(j.at("gbt")), j.at("rf_weight").get<double>()};
      break;
    case ModelKind::iforest: {
      IsolationForest f;
      f.subsample_size = j.at("subsample_size").get<std::size_t>();
      for (const auto& t : j.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto split = t.at("split").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto size = t.at("size").get<std::vector<std::size_t>>();
        IsolationTree tree;
        for (std::size_t i = 0; i < feature.size(); ++i) {
          if (feature[i] >= 0 && (left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) ||
                                  left[i] >= static_cast<int>(feature.size()) ||
                                  right[i] >= static_cast<int>(feature.size())))
            throw SchemaMismatch("isolation tree child index out of range");
          tree.nodes.push_back({feature[i], split.at(i), left.at(i), right.at(i), size.at(i)});
        }
        if (tree.nodes.empty()) throw SchemaMismatch("isolation tree without nodes");
        f.trees.push_back(std::move(tree));
      }
      a.model = std::move(f);
      break;
    }
    case ModelKind::ocsvm: {
      OneClassSvm m;
      m.gamma = j.at("gamma").get<double>();
      m.rho = j.at("rho").get<double>();
      m.support = matrix_from(j.at("support"));
      m.alpha = j.at("alpha").get<std::vector<double>>();
      a.model = std::move(m);
      break;
    }
    case ModelKind::pca: {
      PcaModel m;
      m.kept_columns = j.at("kept_columns").get<std::vector<std::size_t>>();
      m.mean = j.at("mean").get<std::vector<double>>();
      m.scale = j.at("scale").get<std::vector<double>>();
      m.components = matrix_from(j.at("components"));
      m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
      m.explained = j.at("explained").get<double>();
      a.model = std::move(m);
      break;
    }
    case ModelKind::kmeans_det: {
      KMeansDetector m;
      m.scaler.mean = j.at("scaler_mean").get<std::vector<double>>();
      m.scaler.scale = j.at("scaler_scale").get<std::vector<double>>();
      m.centroids = matrix_from(j.at("centroids"));
      a.model = std::move(m);
      break;
    }
  }
}

}  // namespace

json to_json(const ModelArtifact& a) {
  return {{"format", "segad-model"},
          {"version", kModelFormatVersion},
          {"kind", to_string(a.kind)},
          {"feature_names", a.feature_names},
          {"seed", a.seed},
          {"params", a.params},
          {"quantile_levels", kQuantileLevels},
          {"score_quantiles", a.score_quantiles},
          {"warnings", a.warnings},
          {"model", model_json(a)}};
}

ModelArtifact artifact_from_json(const json& doc) {
  try {
    if (!doc.is_object() || doc.value("format", "") != "segad-model")
      throw SchemaMismatch("not a segad model artifact");
    if (doc.at("version").get<int>() != kModelFormatVersion)
      throw SchemaMismatch("model artifact version " + doc.at("version").dump() + " is not supported (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    ModelArtifact a;
    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    if (!kind) throw SchemaMismatch("unknown model kind " + doc.at("kind").dump());
    a.kind = *kind;
    a.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    a.seed = doc.at("seed").get<std::uint64_t>();
    a.params = doc.at("params");
    a.score_quantiles = doc.at("score_quantiles").get<std::vector<double>>();
    a.warnings = doc.at("warnings").get<std::vector<std::string>>();
    model_from(a, doc.at("model"));
    return a;
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("malformed model artifact: ") + e.what());
  }
}

}  // namespace segad::detectors
