#include "segad/importance/importance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "segad/common/error.hpp"
#include "segad/common/parallel.hpp"
#include "segad/common/random.hpp"
#include "segad/common/text.hpp"
#include "segad/evaluation/metrics.hpp"

namespace segad::importance {

ImportanceTable mdi_importance(const detectors::ModelArtifact& model) {
  const detectors::RandomForest* rf = std::get_if<detectors::RandomForest>(&model.model);
  if (const auto* e = std::get_if<detectors::EnsembleModel>(&model.model)) rf = &e->rf;
  if (!rf) throw RejectedInput("MDI importance needs an rf model, not " + std::string(detectors::to_string(model.kind)));
  if (rf->importances.size() != model.feature_names.size())
    throw RejectedInput("model importances do not match its feature names");
  ImportanceTable t;
  for (std::size_t f = 0; f < model.feature_names.size(); ++f)
    t.push_back({"global", model.feature_names[f], rf->importances[f], 0.0, rf->trees.size(), false});
  std::stable_sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.importance > b.importance; });
  return t;
}

namespace {

double accuracy(std::span<const double> scores, std::span<const std::uint8_t> y, double tau) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += ((scores[i] >= tau) == (y[i] != 0)) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

}  // namespace

ImportanceTable permutation_importance_by_segment(const Scorer& scorer, const Matrix& x,
                                                  const std::vector<std::string>& names,
                                                  std::span<const std::uint8_t> y,
                                                  const segmentation::SegmentMap& map,
                                                  const PermutationOptions& options, Diagnostics* diag) {
  if (options.repetitions < 1) throw RejectedInput("permutation importance needs at least one repetition");
  if (names.size() != x.cols()) throw RejectedInput("feature name count does not match columns");
  if (y.size() != x.rows() || map.rows() != x.rows())
    throw RejectedInput("labels and segment map must cover every row");

  struct SegmentJob {
    int id;
    data::RowRange rows;
    bool fallback;
    double baseline;
  };
  std::vector<SegmentJob> segments;
  const auto ranges = map.ranges();
  for (std::size_t s = 0; s < ranges.size(); ++s) {
    const auto r = ranges[s];
    const std::span<const std::uint8_t> ys = y.subspan(r.begin, r.size());
    std::size_t pos = 0;
    for (auto v : ys) pos += v ? 1 : 0;
    const bool single = pos == 0 || pos == ys.size();
    if (single && !options.accuracy_fallback) {
      warn(diag, "permutation importance: segment " + std::to_string(s) + " has a single class; skipped");
      continue;
    }
    if (single) warn(diag, "permutation importance: segment " + std::to_string(s) + " has a single class; scored by accuracy");
    segments.push_back({static_cast<int>(s), r, single, 0.0});
  }

  auto metric = [&](const SegmentJob& seg, const std::vector<double>& scores) {
    const auto ys = y.subspan(seg.rows.begin, seg.rows.size());
    if (seg.fallback) return accuracy(scores, ys, options.accuracy_threshold);
    return *evaluation::roc_auc(scores, ys);
  };

  parallel_for(segments.size(), [&](std::size_t s) {
    auto& seg = segments[s];
    const Matrix xs = x.select_rows([&] {
      std::vector<std::size_t> idx(seg.rows.size());
      std::iota(idx.begin(), idx.end(), seg.rows.begin);
      return idx;
    }());
    seg.baseline = metric(seg, scorer(xs));
  });

  const std::size_t d = x.cols();
  const std::size_t r_count = options.repetitions;
  ImportanceTable table(segments.size() * d);
  parallel_for(segments.size() * d, [&](std::size_t cell) {
    const auto& seg = segments[cell / d];
    const std::size_t f = cell % d;
    std::vector<std::size_t> idx(seg.rows.size());
    std::iota(idx.begin(), idx.end(), seg.rows.begin);
    Matrix xs = x.select_rows(idx);
    const std::vector<double> original = xs.column(f);
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(seg.id), f));
    std::vector<double> drops;
    std::vector<double> shuffled = original;
    for (std::size_t rep = 0; rep < r_count; ++rep) {
      shuffled = original;
      if (!options.identity_permutation) std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t i = 0; i < xs.rows(); ++i) xs(i, f) = shuffled[i];
      drops.push_back(seg.baseline - metric(seg, scorer(xs)));
    }
    const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(r_count);
    double se = std::numeric_limits<double>::infinity();
    if (r_count > 1) {
      double ss = 0.0;
      for (double v : drops) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / static_cast<double>(r_count - 1)) / std::sqrt(static_cast<double>(r_count));
    }
    table[cell] = {std::to_string(seg.id), names[f], mean, se, r_count, seg.fallback};
  });
  return table;
}

std::string importance_csv(const ImportanceTable& table) {
  std::string out = "scope,feature,importance,stderr,repetitions\n";
  for (const auto& r : table)
    out += r.scope + "," + r.feature + "," + format_double(r.importance) + "," + format_double(r.stderr_) + "," +
           std::to_string(r.repetitions) + "\n";
  return out;
}

std::string top_k_report(const ImportanceTable& table, std::size_t k) {
  std::vector<const ImportanceRow*> global;
  for (const auto& r : table)
    if (r.scope == "global") global.push_back(&r);
  std::stable_sort(global.begin(), global.end(), [](auto* a, auto* b) { return a->importance > b->importance; });
  std::string out = "rank,feature,importance\n";
  for (std::size_t i = 0; i < std::min(k, global.size()); ++i)
    out += std::to_string(i + 1) + "," + global[i]->feature + "," + format_double(global[i]->importance) + "\n";
  return out;
}

std::vector<CategoryPattern> default_categories() {
  return {{"*_segment", "segmented variables"},
          {"*_score_pre_cp", "derived indicators"},
          {"*_dist_last_cp", "derived indicators"},
          {"*_cp_freq", "derived indicators"},
          {"*_delta_f", "derived indicators"},
          {"*_subcluster", "derived indicators"},
          {"*_score", "derived indicators"},
          {"*fficiency*", "system efficiency"},
          {"*", "raw process variables"}};
}

CategorySummary category_summary(const ImportanceTable& table, const std::vector<CategoryPattern>& patterns,
                                 Diagnostics* diag) {
  CategorySummary out;
  auto slot = [&](const std::string& cat) {
    auto it = std::find(out.categories.begin(), out.categories.end(), cat);
    if (it != out.categories.end()) return static_cast<std::size_t>(it - out.categories.begin());
    out.categories.push_back(cat);
    out.global.push_back(0.0);
    out.segment_level.push_back(0.0);
    return out.categories.size() - 1;
  };
  for (const auto& p : patterns) slot(p.category);

  std::vector<std::string> warned;
  auto category_of = [&](const std::string& feature) {
    for (const auto& p : patterns)
      if (glob_match(p.pattern, feature)) return slot(p.category);
    if (std::find(warned.begin(), warned.end(), feature) == warned.end()) {
      warned.push_back(feature);
      warn(diag, "importance: feature '" + feature + "' matches no category; counted as other");
    }
    return slot("other");
  };

  // Segment-level importance of a feature: its mean over segments.
  std::map<std::string, std::pair<double, std::size_t>> seg_sum;
  std::vector<std::string> seg_order;
  for (const auto& r : table) {
    if (r.scope == "global") {
      out.global[category_of(r.feature)] += std::max(r.importance, 0.0);
    } else {
      auto [it, fresh] = seg_sum.try_emplace(r.feature, 0.0, 0);
      if (fresh) seg_order.push_back(r.feature);
      it->second.first += r.importance;
      it->second.second += 1;
    }
  }
  for (const auto& f : seg_order) {
    const auto& [sum, count] = seg_sum[f];
    out.segment_level[category_of(f)] += std::max(sum / static_cast<double>(count), 0.0);
  }
  for (auto* col : {&out.global, &out.segment_level}) {
    const double s = std::accumulate(col->begin(), col->end(), 0.0);
    if (s > 0.0)
      for (double& v : *col) v /= s;
  }
  return out;
}

std::string category_csv(const CategorySummary& s) {
  std::string out = "category,global,segment_level\n";
  for (std::size_t i = 0; i < s.categories.size(); ++i)
    out += s.categories[i] + "," + format_double(s.global[i]) + "," + format_double(s.segment_level[i]) + "\n";
  return out;
}

}  // namespace segad::importance
