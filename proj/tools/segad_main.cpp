#include <CLI11.hpp>

#include <algorithm>
#include <concepts>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "segad/changepoint/changefinder.hpp"
#include "segad/clustering/per_segment.hpp"
#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/text.hpp"
#include "segad/data/dataset.hpp"
#include "segad/data/frame.hpp"
#include "segad/data/labels.hpp"
#include "segad/evaluation/metrics.hpp"
#include "segad/evaluation/report.hpp"
#include "segad/features/featurize.hpp"
#include "segad/hybrid/pipeline.hpp"
#include "segad/importance/importance.hpp"
#include "segad/segmentation/segmentation.hpp"
#include "segad/synthgen/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segad;

namespace {

enum ExitCode {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kSchema = 3,
  kIo = 4,
  kRejected = 5,
  kConvergence = 6,
};

// Every option is registered here as well so the resolved config can be
// written from the values actually used, not from the raw command line.
class Registry {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& var, const std::string& help) {
    entries_[app].push_back({name, [&var] { return render(var); }});
    return app->add_option("--" + name, var, help);
  }

  // "key=value" lines: global keys first, then one section for the command.
  std::string resolved(const CLI::App* global, const CLI::App* command) const {
    std::ostringstream out;
    emit(out, global);
    out << "\n[" << command->get_name() << "]\n";
    emit(out, command);
    return out.str();
  }

 private:
  struct Entry {
    std::string name;
    std::function<std::string()> render;
  };

  static std::string quote(const std::string& s) { return "\"" + s + "\""; }
  static std::string render(const std::string& v) { return quote(v); }
  static std::string render(bool v) { return v ? "true" : "false"; }
  static std::string render(double v) { return format_double(v); }
  template <std::integral T>
  static std::string render(T v) {
    return std::to_string(v);
  }
  static std::string render(const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + quote(v[i]);
    return s + "]";
  }

  void emit(std::ostringstream& out, const CLI::App* app) const {
    auto it = entries_.find(app);
    if (it == entries_.end()) return;
    for (const auto& e : it->second) out << e.name << "=" << e.render() << "\n";
  }

  std::map<const CLI::App*, std::vector<Entry>> entries_;
};

struct Globals {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out = ".";
};

// Repeated runs over the same data raise the same warning; print it once.
void print_warnings(const Diagnostics& diag) {
  std::vector<std::string> seen;
  for (const auto& w : diag.warnings) {
    if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
    seen.push_back(w);
    std::cerr << "warning: " << w << "\n";
  }
}

void write_output(const Globals& g, const std::string& name, const std::string& content) {
  write_file((fs::path(g.out) / name).string(), content);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaMismatch(path + ": not valid JSON (" + e.what() + ")");
  }
}

// Channel names may contain characters that are awkward in file names.
std::string file_stem(const std::string& channel) {
  std::string s = channel;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
  return s;
}

data::MissingPolicy missing_policy(const std::string& name) {
  auto p = data::parse_missing_policy(name);
  if (!p) throw RejectedInput("unknown missing-value policy '" + name + "'");
  return *p;
}

data::TimeSeriesFrame load_frame(const std::string& path, const std::string& policy) {
  auto frame = data::parse_frame(read_file(path));
  if (frame.has_missing()) frame = data::handle_missing(frame, missing_policy(policy));
  return frame;
}

data::LabelTimeline load_noc(const std::string& path) {
  if (path.empty()) return {};
  return data::parse_noc(read_file(path));
}

data::LabeledDataset load_dataset(const std::string& path) { return data::parse_dataset(read_file(path)); }

hybrid::Pipeline load_pipeline(const std::string& path) { return hybrid::pipeline_from_json(read_json(path)); }

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string preset = "default";
  std::size_t rows = 50000;
  std::size_t channels = 20;
  std::size_t step = 600;
  double regime_changes = 10.0;
  double jump_sigma = 2.0;
  double ar_min = 0.3;
  double ar_max = 0.8;
  std::size_t min_gap = 20;
  double affected_fraction = 0.3;
  double variance_inflation = 2.0;
};

void cmd_synth(const Globals& g, const SynthOptions& o) {
  synthgen::ScenarioConfig c;
  if (o.preset == "hard") {
    c = synthgen::hard_preset(c);
  } else if (o.preset != "default") {
    throw RejectedInput("unknown preset '" + o.preset + "' (default|hard)");
  }
  c.n_rows = o.rows;
  c.n_channels = o.channels;
  c.step_seconds = static_cast<std::int64_t>(o.step);
  c.regime_changes = o.regime_changes;
  c.jump_sigma = o.jump_sigma;
  c.ar_min = o.ar_min;
  c.ar_max = o.ar_max;
  c.min_gap = o.min_gap;
  c.affected_fraction = o.affected_fraction;
  c.variance_inflation = o.variance_inflation;
  const auto s = synthgen::generate_scenario(c, g.seed);
  write_output(g, "frame.csv", data::serialize_frame(s.frame));
  write_output(g, "noc.csv", data::serialize_noc(s.noc));
  write_output(g, "manifest.json", dump_json(s.manifest));
  std::cout << "synth: " << s.frame.rows() << " rows x " << s.frame.channels.size() << " channels, "
            << s.anomaly_rows.size() << " anomaly windows\n";
}

// ---------------------------------------------------------------- cpd

struct CpdOptions {
  std::string frame;
  std::string missing = "interpolate";
  int order = 2;
  double discount = 0.005;
  std::size_t smooth1 = 5;
  std::size_t smooth2 = 5;
  double lambda = 3.0;
  std::size_t min_sep = 10;
  std::size_t skip = 0;
};

void cmd_cpd(const Globals& g, const CpdOptions& o) {
  const auto frame = load_frame(o.frame, o.missing);
  changepoint::ChangeFinderParams p;
  p.order = o.order;
  p.discount = o.discount;
  p.smooth1 = o.smooth1;
  p.smooth2 = o.smooth2;
  p.skip = o.skip;
  const changepoint::ThresholdRule rule{o.lambda, o.min_sep};
  const auto channels = features::detect_changepoints(frame, p, rule);

  fs::create_directories(fs::path(g.out) / "cpd");
  json doc = {{"format", "segad-changepoints"},
              {"version", 1},
              {"params",
               {{"order", p.order},
                {"discount", p.discount},
                {"smooth1", p.smooth1},
                {"smooth2", p.smooth2},
                {"variance_floor", p.variance_floor},
                {"skip", p.skip}}},
              {"rule", {{"lambda", rule.lambda}, {"min_sep", rule.min_sep}}},
              {"rows", frame.rows()}};
  json list = json::array();
  std::size_t total = 0;
  for (const auto& ch : channels) {
    const std::string file = "cpd/" + file_stem(ch.channel) + ".csv";
    std::vector<std::uint8_t> is_cp(frame.rows(), 0);
    for (auto i : ch.cps.indices) is_cp[i] = 1;
    std::string csv = "t,outlier_score,change_score,is_cp\n";
    for (std::size_t t = 0; t < frame.rows(); ++t) {
      csv += std::to_string(t) + "," + format_double(ch.scores.outlier_scores[t]) + "," +
             format_double(ch.scores.change_scores[t]) + "," + (is_cp[t] ? "1" : "0") + "\n";
    }
    write_output(g, file, csv);
    list.push_back({{"channel", ch.channel}, {"file", file}, {"warmup", ch.scores.warmup}, {"changepoints", ch.cps.indices}});
    total += ch.cps.indices.size();
  }
  doc["channels"] = list;
  write_output(g, "changepoints.json", dump_json(doc));
  std::cout << "cpd: " << channels.size() << " channels, " << total << " change points\n";
}

std::vector<features::ChannelChangepoints> load_changepoints(const std::string& dir, std::size_t rows) {
  const json doc = read_json((fs::path(dir) / "changepoints.json").string());
  std::vector<features::ChannelChangepoints> out;
  try {
    if (doc.value("format", "") != "segad-changepoints" || doc.at("version").get<int>() != 1)
      throw SchemaMismatch("unsupported change point file in " + dir);
    changepoint::ChangeFinderParams p;
    const auto& pj = doc.at("params");
    p.order = pj.at("order").get<int>();
    p.discount = pj.at("discount").get<double>();
    p.smooth1 = pj.at("smooth1").get<std::size_t>();
    p.smooth2 = pj.at("smooth2").get<std::size_t>();
    p.variance_floor = pj.at("variance_floor").get<double>();
    p.skip = pj.at("skip").get<std::size_t>();
    const changepoint::ThresholdRule rule{doc.at("rule").at("lambda").get<double>(),
                                          doc.at("rule").at("min_sep").get<std::size_t>()};
    for (const auto& c : doc.at("channels")) {
      features::ChannelChangepoints ch;
      ch.channel = c.at("channel").get<std::string>();
      ch.cps.indices = c.at("changepoints").get<std::vector<std::size_t>>();
      ch.cps.rule = rule;
      ch.scores.params = p;
      ch.scores.warmup = c.at("warmup").get<std::size_t>();
      const std::string text = read_file((fs::path(dir) / c.at("file").get<std::string>()).string());
      std::istringstream in(text);
      std::string line;
      std::getline(in, line);
      if (trim(line) != "t,outlier_score,change_score,is_cp")
        throw SchemaMismatch("unexpected header in change score file for '" + ch.channel + "'");
      while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 4) throw RejectedInput("malformed change score row for '" + ch.channel + "'");
        auto o = parse_double(f[1]);
        auto s = parse_double(f[2]);
        if (!o || !s) throw RejectedInput("non-numeric change score for '" + ch.channel + "'");
        ch.scores.outlier_scores.push_back(*o);
        ch.scores.change_scores.push_back(*s);
      }
      if (ch.scores.size() != rows)
        throw RejectedInput("change scores for '" + ch.channel + "' have " + std::to_string(ch.scores.size()) +
                            " rows, frame has " + std::to_string(rows));
      for (auto i : ch.cps.indices)
        if (i >= rows) throw RejectedInput("change point out of range for '" + ch.channel + "'");
      out.push_back(std::move(ch));
    }
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("change point file: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------- featurize

struct FeaturizeCliOptions {
  std::string frame;
  std::string noc;
  std::string cpd;
  std::string missing = "interpolate";
  bool segments = true;
  bool cp_features = true;
  std::size_t freq_window = 0;
  std::string pre_cp_window = "segment";
  std::size_t fixed_window = 50;
};

void cmd_featurize(const Globals& g, const FeaturizeCliOptions& o) {
  const auto frame = load_frame(o.frame, o.missing);
  const auto noc = load_noc(o.noc);
  const auto cps = load_changepoints(o.cpd, frame.rows());
  features::FeaturizeOptions opt;
  opt.segments = o.segments;
  opt.cp_features = o.cp_features;
  opt.cp.freq_window = o.freq_window ? o.freq_window : features::one_day_rows(frame.step_seconds);
  if (o.pre_cp_window == "segment") {
    opt.cp.window = features::PreCpWindow::segment;
  } else if (o.pre_cp_window == "fixed") {
    opt.cp.window = features::PreCpWindow::fixed;
  } else {
    throw RejectedInput("unknown pre-cp-window '" + o.pre_cp_window + "' (segment|fixed)");
  }
  opt.cp.fixed_window = o.fixed_window;

  Diagnostics diag;
  const auto f = features::featurize(frame, noc, cps, opt, &diag);
  print_warnings(diag);
  write_output(g, "dataset.csv", data::serialize_dataset(f.dataset));

  std::vector<std::pair<std::size_t, const segmentation::SegmentMap*>> cols;
  for (const auto& [channel, map] : f.maps)
    if (auto i = f.dataset.find(channel)) cols.emplace_back(*i, &map);
  write_output(g, "f_ratio.csv", segmentation::f_ratio_csv(segmentation::f_ratio_report(f.dataset, cols)));
  std::cout << "featurize: " << f.dataset.rows() << " rows, " << f.dataset.cols() << " columns\n";
}

// ---------------------------------------------------------------- cluster

struct ClusterCliOptions {
  std::string dataset;
  std::string algorithm = "hdbscan";
  std::vector<std::string> compare{"kmeans", "gmm", "optics", "hdbscan"};
  bool delta_f = true;
  std::size_t k = 3;
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 0;
  std::size_t min_pts = 5;
  double reach_threshold = 0.5;
  double gmm_reg = 1e-6;
  std::size_t min_segment_size = 20;
  std::size_t max_points = 2000;
};

clustering::Algorithm algorithm(const std::string& name) {
  auto a = clustering::parse_algorithm(name);
  if (!a) throw RejectedInput("unknown clustering algorithm '" + name + "'");
  return *a;
}

void cmd_cluster(const Globals& g, const ClusterCliOptions& o) {
  auto dataset = load_dataset(o.dataset);
  const auto maps = features::segment_maps_from(dataset);
  clustering::ClusterParams base;
  base.kmeans.k = o.k;
  base.kmeans.seed = g.seed;
  base.gmm.k = o.k;
  base.gmm.seed = g.seed;
  base.gmm.reg = o.gmm_reg;
  base.hdbscan.min_cluster_size = o.min_cluster_size;
  base.hdbscan.min_samples = o.min_samples;
  base.optics.min_pts = o.min_pts;
  base.optics.reach_threshold = o.reach_threshold;
  base.min_segment_size = o.min_segment_size;
  base.max_points = o.max_points;

  Diagnostics diag;
  std::map<clustering::Algorithm, clustering::PerSegmentResult> runs;
  auto run = [&](clustering::Algorithm a) -> const clustering::PerSegmentResult& {
    auto it = runs.find(a);
    if (it != runs.end()) return it->second;
    auto p = base;
    p.algorithm = a;
    return runs.emplace(a, clustering::cluster_per_segment(dataset, maps, p, &diag)).first->second;
  };

  std::vector<clustering::MetricsRow> metrics;
  for (const auto& name : o.compare) {
    const auto a = algorithm(name);
    metrics.push_back({std::string(clustering::to_string(a)), run(a).averaged});
  }
  clustering::append_subcluster_columns(dataset, run(algorithm(o.algorithm)));

  if (o.delta_f) {
    const auto& op = run(clustering::Algorithm::optics);
    const auto& hd = run(clustering::Algorithm::hdbscan);
    for (std::size_t c = 0; c < maps.size(); ++c) {
      const auto& [channel, map] = maps[c];
      const auto col = dataset.find(channel);
      if (!col) throw RejectedInput("dataset lacks channel column '" + channel + "'");
      const auto df = clustering::segment_delta_f(dataset.columns[*col].values, op.channels[c], hd.channels[c]);
      if (!segmentation::append_delta_f_column(dataset, channel, map, df))
        diag.warn(channel + "_delta_f: undefined in some segments (written as 0)");
    }
  }
  print_warnings(diag);
  write_output(g, "dataset.csv", data::serialize_dataset(dataset));
  write_output(g, "cluster_metrics.csv", clustering::metrics_csv(metrics));
  std::cout << "cluster: " << maps.size() << " channels, " << metrics.size() << " algorithms compared\n";
}

// ---------------------------------------------------------------- detector options

struct DetectorCliOptions {
  std::size_t rf_trees = 100;
  std::size_t rf_depth = 12;
  std::size_t rf_min_leaf = 1;
  bool rf_balanced = false;
  std::size_t gbt_rounds = 100;
  double gbt_learning_rate = 0.1;
  std::size_t gbt_depth = 4;
  double gbt_subsample = 1.0;
  double ensemble_rf_weight = 0.5;
  std::size_t iforest_trees = 100;
  std::size_t iforest_subsample = 256;
  double ocsvm_nu = 0.1;
  double ocsvm_gamma = 0.0;
  std::size_t ocsvm_max_train = 5000;
  double pca_variance_keep = 0.95;
  std::size_t kmeans_k = 8;

  detectors::DetectorParams params() const {
    detectors::DetectorParams p;
    p.rf.n_trees = rf_trees;
    p.rf.max_depth = rf_depth;
    p.rf.min_leaf = rf_min_leaf;
    p.rf.class_weighting = rf_balanced ? detectors::ClassWeighting::balanced : detectors::ClassWeighting::none;
    p.gbt.n_rounds = gbt_rounds;
    p.gbt.learning_rate = gbt_learning_rate;
    p.gbt.max_depth = gbt_depth;
    p.gbt.subsample = gbt_subsample;
    p.ensemble_rf_weight = ensemble_rf_weight;
    p.iforest.n_trees = iforest_trees;
    p.iforest.subsample_size = iforest_subsample;
    p.ocsvm.nu = ocsvm_nu;
    p.ocsvm.gamma = ocsvm_gamma;
    p.ocsvm.max_train = ocsvm_max_train;
    p.pca.variance_keep = pca_variance_keep;
    p.kmeans.k = kmeans_k;
    return p;
  }
};

void add_detector_options(Registry& reg, CLI::App* app, DetectorCliOptions& d) {
  reg.add(app, "rf-trees", d.rf_trees, "random forest size");
  reg.add(app, "rf-depth", d.rf_depth, "random forest maximum depth");
  reg.add(app, "rf-min-leaf", d.rf_min_leaf, "random forest minimum leaf size");
  reg.add(app, "rf-balanced", d.rf_balanced, "weight classes by inverse frequency");
  reg.add(app, "gbt-rounds", d.gbt_rounds, "boosting rounds");
  reg.add(app, "gbt-learning-rate", d.gbt_learning_rate, "boosting shrinkage");
  reg.add(app, "gbt-depth", d.gbt_depth, "boosted tree depth");
  reg.add(app, "gbt-subsample", d.gbt_subsample, "row fraction per boosting round");
  reg.add(app, "ensemble-rf-weight", d.ensemble_rf_weight, "forest weight in the rf+gbt ensemble");
  reg.add(app, "iforest-trees", d.iforest_trees, "isolation forest size");
  reg.add(app, "iforest-subsample", d.iforest_subsample, "isolation tree sample size");
  reg.add(app, "ocsvm-nu", d.ocsvm_nu, "one-class SVM nu");
  reg.add(app, "ocsvm-gamma", d.ocsvm_gamma, "RBF gamma (0: 1/(d var))");
  reg.add(app, "ocsvm-max-train", d.ocsvm_max_train, "one-class SVM training row cap");
  reg.add(app, "pca-variance-keep", d.pca_variance_keep, "retained variance fraction");
  reg.add(app, "kmeans-k", d.kmeans_k, "k-means detector centroids");
}

evaluation::ThresholdRule threshold_rule(const std::string& text) {
  auto r = evaluation::parse_threshold_rule(text);
  if (!r) throw RejectedInput("bad threshold rule '" + text + "' (f1-optimal|quantile:<rate>|fixed:<tau>)");
  return *r;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string dataset;
  std::string spec = "baseline";
  double train_fraction = 0.6;
  DetectorCliOptions detectors;
};

void cmd_train(const Globals& g, const TrainOptions& o) {
  const auto dataset = load_dataset(o.dataset);
  const auto spec = hybrid::parse_spec(o.spec, o.detectors.params());
  const std::size_t cut = hybrid::temporal_cut(dataset.rows(), o.train_fraction);
  Diagnostics diag;
  const auto p = hybrid::train_pipeline(spec, dataset, cut, g.seed, &diag);
  print_warnings(diag);
  write_output(g, "pipeline.json", dump_json(hybrid::pipeline_json(p)));
  std::cout << "train: " << spec.name << " on rows [0, " << cut << "), " << p.input_features.size()
            << " features\n";
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string model;
  std::string dataset;
  std::string noc;
  std::string threshold = "f1-optimal";
  std::string rows = "test";
};

// [begin, end) for "test" (after the training rows), "all" or "<begin>:<end>".
data::RowRange eval_range(const std::string& spec, std::size_t train_rows, std::size_t n) {
  if (spec == "test") return {std::min(train_rows, n), n};
  if (spec == "all") return {0, n};
  const auto parts = split(spec, ':');
  if (parts.size() == 2) {
    auto b = parse_int(parts[0]);
    auto e = parse_int(parts[1]);
    if (b && e && *b >= 0 && *b < *e && static_cast<std::size_t>(*e) <= n)
      return {static_cast<std::size_t>(*b), static_cast<std::size_t>(*e)};
  }
  throw RejectedInput("bad row range '" + spec + "' (test|all|<begin>:<end> within " + std::to_string(n) + ")");
}

// Event intervals clipped to the range and shifted to range-relative rows.
std::vector<data::RowRange> clip_intervals(const std::vector<data::RowRange>& all, data::RowRange r) {
  std::vector<data::RowRange> out;
  for (const auto& iv : all) {
    const std::size_t b = std::max(iv.begin, r.begin);
    const std::size_t e = std::min(iv.end, r.end);
    if (b < e) out.push_back({b - r.begin, e - r.begin});
  }
  return out;
}

void cmd_evaluate(const Globals& g, const EvaluateOptions& o) {
  const auto p = load_pipeline(o.model);
  const auto dataset = load_dataset(o.dataset);
  const auto range = eval_range(o.rows, p.train_rows, dataset.rows());
  if (range.size() == 0) throw RejectedInput("evaluation range is empty");
  const auto rule = threshold_rule(o.threshold);

  const auto scores = hybrid::score_pipeline(p, dataset, range.begin, range.end);
  const std::vector<std::uint8_t> labels(dataset.labels.begin() + static_cast<std::ptrdiff_t>(range.begin),
                                         dataset.labels.begin() + static_cast<std::ptrdiff_t>(range.end));
  std::vector<double> reference;
  if (rule.kind == evaluation::ThresholdKind::quantile && p.train_rows > 0)
    reference = hybrid::score_pipeline(p, dataset, 0, p.train_rows);

  const auto intervals =
      o.noc.empty() ? data::runs_of_true(dataset.labels)
                    : data::anomalous_row_ranges(load_noc(o.noc), dataset.timestamps);
  const auto local = clip_intervals(intervals, range);
  const double tau = evaluation::resolve_threshold(rule, scores, labels, reference);
  const auto report = evaluation::assemble_report(p.spec.name, scores, labels, local, tau,
                                                  evaluation::to_string(rule), dataset.step_seconds);
  write_output(g, "report.json", dump_json(evaluation::report_json(report)));
  write_output(g, "report.csv", evaluation::report_csv(report));
  const std::string pretty = evaluation::pretty_report(report);
  write_output(g, "report.txt", pretty);
  std::cout << pretty;
}

// ---------------------------------------------------------------- compare

struct CompareOptions {
  std::string dataset;
  std::vector<std::string> specs{"baseline", "cp-features-all", "cp-features-top3", "pca+ocsvm", "ocsvm+rf"};
  double train_fraction = 0.6;
  std::string threshold = "f1-optimal";
  DetectorCliOptions detectors;
};

void cmd_compare(const Globals& g, const CompareOptions& o) {
  const auto dataset = load_dataset(o.dataset);
  const auto params = o.detectors.params();
  std::vector<hybrid::PipelineSpec> specs;
  for (const auto& s : o.specs) specs.push_back(hybrid::parse_spec(s, params));
  hybrid::ComparisonConfig cfg;
  cfg.train_fraction = o.train_fraction;
  cfg.threshold = threshold_rule(o.threshold);
  cfg.seed = g.seed;
  Diagnostics diag;
  const auto rows = hybrid::run_comparison(dataset, specs, cfg, &diag);
  print_warnings(diag);
  const std::string csv = hybrid::comparison_csv(rows);
  write_output(g, "comparison.csv", csv);
  write_output(g, "comparison.json", dump_json(hybrid::comparison_json(rows)));
  std::cout << csv;
}

// ---------------------------------------------------------------- importance

struct ImportanceOptions {
  std::string model;
  std::string dataset;
  std::string segment_channel;
  std::string rows = "test";
  std::size_t repetitions = 5;
  std::size_t top_k = 10;
  bool accuracy_fallback = false;
};

// Segment map restricted to a row range, with ids renumbered from 0.
segmentation::SegmentMap sub_map(const segmentation::SegmentMap& map, data::RowRange r) {
  std::vector<double> ids;
  ids.reserve(r.size());
  const int first = map.ids[r.begin];
  for (std::size_t i = r.begin; i < r.end; ++i) ids.push_back(map.ids[i] - first);
  return segmentation::segment_map_from_column(ids);
}

void cmd_importance(const Globals& g, const ImportanceOptions& o) {
  const auto p = load_pipeline(o.model);
  const auto dataset = load_dataset(o.dataset);
  const auto maps = features::segment_maps_from(dataset);
  const auto range = eval_range(o.rows, p.train_rows, dataset.rows());
  if (range.size() == 0) throw RejectedInput("importance range is empty");

  const segmentation::SegmentMap* map = &maps.front().second;
  std::string channel = maps.front().first;
  if (!o.segment_channel.empty()) {
    auto it = std::find_if(maps.begin(), maps.end(), [&](const auto& m) { return m.first == o.segment_channel; });
    if (it == maps.end()) throw RejectedInput("no segment column for channel '" + o.segment_channel + "'");
    map = &it->second;
    channel = it->first;
  }

  Diagnostics diag;
  importance::ImportanceTable table;
  const auto& last = p.stages.back();
  const bool has_forest = last.kind == detectors::ModelKind::rf || last.kind == detectors::ModelKind::ensemble;
  if (has_forest && p.stages.size() == 1) {
    table = importance::mdi_importance(last);
  } else {
    diag.warn("global MDI needs a single-stage rf or ensemble pipeline; only segment rows are reported");
  }

  importance::PermutationOptions po;
  po.repetitions = o.repetitions;
  po.seed = g.seed;
  po.accuracy_fallback = o.accuracy_fallback;
  const Matrix x = hybrid::input_matrix(p, dataset, range.begin, range.end);
  const std::vector<std::uint8_t> y(dataset.labels.begin() + static_cast<std::ptrdiff_t>(range.begin),
                                    dataset.labels.begin() + static_cast<std::ptrdiff_t>(range.end));
  const auto scorer = [&p](const Matrix& m) { return hybrid::score_matrix(p, m); };
  const auto seg = importance::permutation_importance_by_segment(scorer, x, p.input_features, y,
                                                                 sub_map(*map, range), po, &diag);
  table.insert(table.end(), seg.begin(), seg.end());

  const auto summary = importance::category_summary(table, importance::default_categories(), &diag);
  print_warnings(diag);
  write_output(g, "importance.csv", importance::importance_csv(table));
  write_output(g, "top_k.csv", importance::top_k_report(table, o.top_k));
  write_output(g, "categories.csv", importance::category_csv(summary));
  std::cout << "importance: " << table.size() << " rows (segments of " << channel << ")\n";
}

// ---------------------------------------------------------------- errors

int report_error(const std::string& message, const std::string& kind, int code) {
  std::cerr << json{{"error", message}, {"kind", kind}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segment-aware anomaly detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file; [<command>] sections hold command options");

  Registry reg;
  Globals g;
  g.jobs = std::max(1u, std::thread::hardware_concurrency());
  reg.add(&app, "seed", g.seed, "master random seed")->required();
  app.add_option("--jobs", g.jobs, "worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");

  std::function<void()> action;
  auto sub = [&](const char* name, const char* help, std::function<void()> f) {
    auto* s = app.add_subcommand(name, help);
    s->callback([&action, f] { action = f; });
    return s;
  };

  SynthOptions synth;
  auto* s_synth = sub("synth", "generate a synthetic scenario", [&] { cmd_synth(g, synth); });
  reg.add(s_synth, "preset", synth.preset, "default|hard");
  reg.add(s_synth, "rows", synth.rows, "rows per channel");
  reg.add(s_synth, "channels", synth.channels, "channel count");
  reg.add(s_synth, "step", synth.step, "sampling step in seconds");
  reg.add(s_synth, "regime-changes", synth.regime_changes, "expected regime changes per channel");
  reg.add(s_synth, "jump-sigma", synth.jump_sigma, "regime level jump");
  reg.add(s_synth, "ar-min", synth.ar_min, "smallest AR(1) coefficient");
  reg.add(s_synth, "ar-max", synth.ar_max, "largest AR(1) coefficient");
  reg.add(s_synth, "min-gap", synth.min_gap, "minimum rows between regime changes");
  reg.add(s_synth, "affected-fraction", synth.affected_fraction, "channels carrying the anomaly");
  reg.add(s_synth, "variance-inflation", synth.variance_inflation, "noise variance factor inside anomalies");

  CpdOptions cpd;
  auto* s_cpd = sub("cpd", "score change points per channel", [&] { cmd_cpd(g, cpd); });
  reg.add(s_cpd, "frame", cpd.frame, "frame CSV")->required();
  reg.add(s_cpd, "missing", cpd.missing, "forward_fill|interpolate|drop_row");
  reg.add(s_cpd, "order", cpd.order, "SDAR order k");
  reg.add(s_cpd, "discount", cpd.discount, "SDAR discount r");
  reg.add(s_cpd, "smooth1", cpd.smooth1, "stage-1 smoothing window T1");
  reg.add(s_cpd, "smooth2", cpd.smooth2, "stage-2 smoothing window T2");
  reg.add(s_cpd, "lambda", cpd.lambda, "threshold in standard deviations");
  reg.add(s_cpd, "min-sep", cpd.min_sep, "minimum rows between change points");
  reg.add(s_cpd, "skip", cpd.skip, "leading rows excluded from scoring");

  FeaturizeCliOptions feat;
  auto* s_feat = sub("featurize", "build the feature dataset", [&] { cmd_featurize(g, feat); });
  reg.add(s_feat, "frame", feat.frame, "frame CSV")->required();
  reg.add(s_feat, "noc", feat.noc, "NoC CSV (empty: every row normal)");
  reg.add(s_feat, "cpd", feat.cpd, "directory written by cpd")->required();
  reg.add(s_feat, "missing", feat.missing, "forward_fill|interpolate|drop_row");
  reg.add(s_feat, "segments", feat.segments, "emit <channel>_segment columns");
  reg.add(s_feat, "cp-features", feat.cp_features, "emit change point feature columns");
  reg.add(s_feat, "freq-window", feat.freq_window, "cp_freq window in rows (0: one day)");
  reg.add(s_feat, "pre-cp-window", feat.pre_cp_window, "segment|fixed");
  reg.add(s_feat, "fixed-window", feat.fixed_window, "rows for the fixed pre-CP window");

  ClusterCliOptions clu;
  auto* s_clu = sub("cluster", "cluster each segment", [&] { cmd_cluster(g, clu); });
  reg.add(s_clu, "dataset", clu.dataset, "dataset CSV")->required();
  reg.add(s_clu, "algorithm", clu.algorithm, "algorithm for the subcluster columns");
  reg.add(s_clu, "compare", clu.compare, "algorithms in the metrics table");
  reg.add(s_clu, "delta-f", clu.delta_f, "emit OPTICS minus HDBSCAN delta-F columns");
  reg.add(s_clu, "k", clu.k, "clusters for kmeans and gmm");
  reg.add(s_clu, "min-cluster-size", clu.min_cluster_size, "HDBSCAN minimum cluster size");
  reg.add(s_clu, "min-samples", clu.min_samples, "HDBSCAN core neighbours (0: min-cluster-size)");
  reg.add(s_clu, "min-pts", clu.min_pts, "OPTICS core neighbours");
  reg.add(s_clu, "reach-threshold", clu.reach_threshold, "OPTICS reachability cut");
  reg.add(s_clu, "gmm-reg", clu.gmm_reg, "covariance ridge");
  reg.add(s_clu, "min-segment-size", clu.min_segment_size, "smaller segments are skipped");
  reg.add(s_clu, "max-points", clu.max_points, "per-segment fitting sample cap");

  TrainOptions train;
  auto* s_train = sub("train", "train a detection pipeline", [&] { cmd_train(g, train); });
  reg.add(s_train, "dataset", train.dataset, "dataset CSV")->required();
  reg.add(s_train, "spec", train.spec, "named spec or kind[+kind][@augment]");
  reg.add(s_train, "train-fraction", train.train_fraction, "leading fraction of rows used for training");
  add_detector_options(reg, s_train, train.detectors);

  EvaluateOptions eval;
  auto* s_eval = sub("evaluate", "score and report a trained pipeline", [&] { cmd_evaluate(g, eval); });
  reg.add(s_eval, "model", eval.model, "pipeline JSON")->required();
  reg.add(s_eval, "dataset", eval.dataset, "dataset CSV")->required();
  reg.add(s_eval, "noc", eval.noc, "NoC CSV for event intervals (empty: label runs)");
  reg.add(s_eval, "threshold", eval.threshold, "f1-optimal|quantile:<rate>|fixed:<tau>");
  reg.add(s_eval, "rows", eval.rows, "test|all|<begin>:<end>");

  CompareOptions cmp;
  auto* s_cmp = sub("compare", "compare pipelines on one temporal split", [&] { cmd_compare(g, cmp); });
  reg.add(s_cmp, "dataset", cmp.dataset, "dataset CSV")->required();
  reg.add(s_cmp, "specs", cmp.specs, "pipeline specs; the first is the reference row");
  reg.add(s_cmp, "train-fraction", cmp.train_fraction, "leading fraction of rows used for training");
  reg.add(s_cmp, "threshold", cmp.threshold, "f1-optimal|quantile:<rate>|fixed:<tau>");
  add_detector_options(reg, s_cmp, cmp.detectors);

  ImportanceOptions imp;
  auto* s_imp = sub("importance", "global and per-segment feature importance", [&] { cmd_importance(g, imp); });
  reg.add(s_imp, "model", imp.model, "pipeline JSON")->required();
  reg.add(s_imp, "dataset", imp.dataset, "dataset CSV")->required();
  reg.add(s_imp, "segment-channel", imp.segment_channel, "channel whose segments scope the permutations");
  reg.add(s_imp, "rows", imp.rows, "test|all|<begin>:<end>");
  reg.add(s_imp, "repetitions", imp.repetitions, "shuffles per segment and feature");
  reg.add(s_imp, "top-k", imp.top_k, "rows in the top-k report");
  reg.add(s_imp, "accuracy-fallback", imp.accuracy_fallback, "score single-class segments by accuracy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(e.what(), "usage", kUsage);
  }

  try {
    set_max_workers(g.jobs);
    fs::create_directories(g.out);
    const CLI::App* command = app.get_subcommands().front();
    write_output(g, "config.ini", reg.resolved(&app, command));
    action();
  } catch (const SchemaMismatch& e) {
    return report_error(e.what(), e.kind(), kSchema);
  } catch (const IoError& e) {
    return report_error(e.what(), e.kind(), kIo);
  } catch (const fs::filesystem_error& e) {
    return report_error(e.what(), "io_error", kIo);
  } catch (const RejectedInput& e) {
    return report_error(e.what(), e.kind(), kRejected);
  } catch (const ConvergenceFailure& e) {
    return report_error(e.what(), e.kind(), kConvergence);
  } catch (const std::exception& e) {
    return report_error(e.what(), "error", kOther);
  }
  return kOk;
}
