#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "segad/common/error.hpp"
#include "segad/common/text.hpp"
#include "segad/data/dataset.hpp"
#include "segad/data/frame.hpp"
#include "segad/data/labels.hpp"

using namespace segad;
using namespace segad::data;

namespace {

constexpr std::int64_t kT0 = 1577836800;  // 2020-01-01T00:00:00Z

std::string ts(std::int64_t offset) { return format_iso8601(kT0 + offset); }

// n rows at 60 s, channel values row and 10*row.
TimeSeriesFrame grid_frame(std::size_t n) {
  std::string csv = "timestamp,a,b\n";
  for (std::size_t i = 0; i < n; ++i)
    csv += ts(60 * static_cast<std::int64_t>(i)) + "," + std::to_string(i) + "," + std::to_string(10 * i) + "\n";
  return parse_frame(csv);
}

LabelTimeline anomalous(std::int64_t start, std::int64_t end) {
  return {{{kT0 + start, kT0 + end, OperatingState::anomalous}}};
}

}  // namespace

TEST(ParseFrame, MinimalThreeRows) {
  const auto f = parse_frame("timestamp,x,y\n" + ts(0) + ",1,2\n" + ts(60) + ",3,4\n" + ts(120) + ",5,6\n");
  EXPECT_EQ(f.rows(), 3u);
  ASSERT_EQ(f.channels.size(), 2u);
  EXPECT_EQ(f.channels[0], "x");
  EXPECT_EQ(f.channels[1], "y");
  EXPECT_DOUBLE_EQ(f.step_seconds, 60.0);
  EXPECT_EQ(f.values(2, 1), 6.0);
}

TEST(ParseFrame, NonMonotoneRejected) {
  const std::string csv = "timestamp,x\n" + ts(120) + ",1\n" + ts(0) + ",2\n" + ts(60) + ",3\n";
  EXPECT_THROW(parse_frame(csv), RejectedInput);
}

TEST(ParseFrame, IrregularStepRejected) {
  // Second gap deviates by 2 s on a 60 s step (3.3% > 1%).
  const std::string csv = "timestamp,x\n" + ts(0) + ",1\n" + ts(60) + ",2\n" + ts(122) + ",3\n" + ts(182) + ",4\n";
  EXPECT_THROW(parse_frame(csv), RejectedInput);
}

TEST(ParseFrame, NonNumericCellNamesLocation) {
  const std::string csv = "timestamp,x,y\n" + ts(0) + ",1,2\n" + ts(60) + ",3,abc\n";
  try {
    parse_frame(csv);
    FAIL() << "expected RejectedInput";
  } catch (const RejectedInput& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("y"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
  }
}

TEST(ParseFrame, SchemaSelectsAndReorders) {
  const auto f = parse_frame("timestamp,x,y,z\n" + ts(0) + ",1,2,3\n" + ts(60) + ",4,5,6\n", {"z", "x"});
  ASSERT_EQ(f.channels, (std::vector<std::string>{"z", "x"}));
  EXPECT_EQ(f.values(1, 0), 6.0);
  EXPECT_EQ(f.values(1, 1), 4.0);
}

TEST(ParseFrame, MissingCellsBecomeNaN) {
  const auto f = parse_frame("timestamp,x\n" + ts(0) + ",1\n" + ts(60) + ",\n" + ts(120) + ",NaN\n");
  EXPECT_TRUE(std::isnan(f.values(1, 0)));
  EXPECT_TRUE(std::isnan(f.values(2, 0)));
  EXPECT_TRUE(f.has_missing());
}

TEST(HandleMissing, ForwardFillCopiesPreviousRow) {
  const auto f = parse_frame("timestamp,x\n" + ts(0) + ",1.5\n" + ts(60) + ",\n" + ts(120) + ",7\n");
  const auto g = handle_missing(f, MissingPolicy::forward_fill);
  EXPECT_EQ(g.values(1, 0), 1.5);
  EXPECT_FALSE(g.has_missing());
}

TEST(HandleMissing, InterpolateMidpoint) {
  const auto f = parse_frame("timestamp,x\n" + ts(0) + ",1\n" + ts(60) + ",NaN\n" + ts(120) + ",3\n");
  const auto g = handle_missing(f, MissingPolicy::interpolate);
  EXPECT_EQ(g.channel(0), (std::vector<double>{1, 2, 3}));
}

TEST(HandleMissing, InterpolateTwoGaps) {
  const auto f =
      parse_frame("timestamp,x\n" + ts(0) + ",1\n" + ts(60) + ",\n" + ts(120) + ",\n" + ts(180) + ",4\n");
  const auto g = handle_missing(f, MissingPolicy::interpolate);
  const auto v = g.channel(0);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v[1], 2.0);
  EXPECT_DOUBLE_EQ(v[2], 3.0);
}

TEST(HandleMissing, LeadingNaNForwardFillRejected) {
  const auto f = parse_frame("timestamp,x\n" + ts(0) + ",NaN\n" + ts(60) + ",2\n");
  EXPECT_THROW(handle_missing(f, MissingPolicy::forward_fill), RejectedInput);
}

TEST(HandleMissing, DropRowRechecksStep) {
  // Dropping an interior row leaves a double gap: irregular.
  const auto f =
      parse_frame("timestamp,x\n" + ts(0) + ",1\n" + ts(60) + ",\n" + ts(120) + ",3\n" + ts(180) + ",4\n");
  EXPECT_THROW(handle_missing(f, MissingPolicy::drop_row), RejectedInput);
  // Dropping the last row keeps the grid.
  const auto g = parse_frame("timestamp,x\n" + ts(0) + ",1\n" + ts(60) + ",2\n" + ts(120) + ",\n");
  EXPECT_EQ(handle_missing(g, MissingPolicy::drop_row).rows(), 2u);
}

TEST(ParseNoc, SingleInterval) {
  const auto tl = parse_noc("start,end,state\n" + ts(600) + "," + ts(1200) + ",anomalous\n");
  ASSERT_EQ(tl.intervals.size(), 1u);
  const auto f = grid_frame(30);
  const auto labels = label_rows(tl, f.timestamps);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(labels[i], i >= 10 && i < 20 ? 1 : 0) << i;
}

TEST(ParseNoc, OverlapRejected) {
  EXPECT_THROW(parse_noc("start,end,state\n" + ts(0) + "," + ts(600) + ",normal\n" + ts(300) + "," + ts(900) +
                         ",anomalous\n"),
               RejectedInput);
}

TEST(ParseNoc, UnknownStateRejected) {
  EXPECT_THROW(parse_noc("start,end,state\n" + ts(0) + "," + ts(600) + ",broken\n"), RejectedInput);
}

TEST(ParseNoc, EmptySourceAllNormal) {
  const auto tl = parse_noc("");
  EXPECT_TRUE(tl.intervals.empty());
  const auto ds = align_labels(grid_frame(5), tl);
  EXPECT_EQ(ds.prevalence(), 0.0);
}

TEST(ParseNoc, SortsByStart) {
  const auto tl = parse_noc("start,end,state\n" + ts(600) + "," + ts(900) + ",anomalous\n" + ts(0) + "," +
                            ts(600) + ",normal\n");
  ASSERT_EQ(tl.intervals.size(), 2u);
  EXPECT_LT(tl.intervals[0].start, tl.intervals[1].start);
}

TEST(AlignLabels, TenRowsOfHundred) {
  const auto ds = align_labels(grid_frame(100), anomalous(50 * 60, 60 * 60));
  std::size_t sum = 0;
  for (auto v : ds.labels) sum += v;
  EXPECT_EQ(sum, 10u);
  EXPECT_DOUBLE_EQ(ds.prevalence(), 0.10);
  for (std::size_t i = 50; i < 60; ++i) EXPECT_EQ(ds.labels[i], 1);
}

TEST(AlignLabels, HalfOutsideRangeFlagsOnlyInRange) {
  // Interval from row 95 to row 110 on a 100-row frame: rows 95..99.
  const auto ds = align_labels(grid_frame(100), anomalous(95 * 60, 110 * 60));
  std::size_t sum = 0;
  for (auto v : ds.labels) sum += v;
  EXPECT_EQ(sum, 5u);
  // Starting before the frame: rows 0..4.
  const auto early = align_labels(grid_frame(100), anomalous(-10 * 60, 5 * 60));
  sum = 0;
  for (auto v : early.labels) sum += v;
  EXPECT_EQ(sum, 5u);
  EXPECT_EQ(early.labels[4], 1);
  EXPECT_EQ(early.labels[5], 0);
}

TEST(AlignLabels, NoOverlapWarns) {
  Diagnostics diag;
  const auto ds = align_labels(grid_frame(10), anomalous(100000, 200000), &diag);
  EXPECT_EQ(ds.prevalence(), 0.0);
  EXPECT_FALSE(diag.empty());
}

TEST(AlignLabels, Idempotent) {
  const auto frame = grid_frame(50);
  const auto tl = anomalous(7 * 60, 19 * 60);
  const auto once = align_labels(frame, tl);
  const auto twice = label_rows(tl, once.timestamps);
  EXPECT_EQ(once.labels, twice);
}

// Sum of labels equals the intersected length over the step, for random
// grid-aligned interval sets.
TEST(AlignLabels, LabelSumMatchesIntersectionLength) {
  std::mt19937_64 rng(7);
  const std::size_t n = 200;
  const auto frame = grid_frame(n);
  for (int trial = 0; trial < 50; ++trial) {
    LabelTimeline tl;
    std::int64_t cursor = -20;
    std::int64_t expected = 0;
    while (cursor < static_cast<std::int64_t>(n) + 20) {
      const std::int64_t gap = static_cast<std::int64_t>(rng() % 30);
      const std::int64_t len = 1 + static_cast<std::int64_t>(rng() % 25);
      const std::int64_t s = cursor + gap, e = s + len;
      tl.intervals.push_back({kT0 + 60 * s, kT0 + 60 * e, OperatingState::anomalous});
      expected += std::max<std::int64_t>(0, std::min<std::int64_t>(e, n) - std::max<std::int64_t>(s, 0));
      cursor = e;
    }
    const auto ds = align_labels(frame, tl);
    std::int64_t sum = 0;
    for (auto v : ds.labels) sum += v;
    EXPECT_EQ(sum, expected);
  }
}

TEST(Frame, RoundTripBitExact) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  TimeSeriesFrame f;
  f.channels = {"p", "q", "r"};
  f.step_seconds = 30;
  f.values = Matrix(40, 3);
  for (std::size_t i = 0; i < 40; ++i) {
    f.timestamps.push_back(kT0 + 30 * static_cast<std::int64_t>(i));
    for (std::size_t c = 0; c < 3; ++c) f.values(i, c) = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
  }
  f.values(3, 1) = 0.1;
  f.values(4, 2) = -0.0;
  f.values(5, 0) = 5e-324;
  const auto g = parse_frame(serialize_frame(f));
  EXPECT_EQ(g.timestamps, f.timestamps);
  EXPECT_EQ(g.channels, f.channels);
  for (std::size_t i = 0; i < f.values.data().size(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(std::abs(g.values.data()[i])),
              std::bit_cast<std::uint64_t>(std::abs(f.values.data()[i])));
}

TEST(Noc, RoundTrip) {
  LabelTimeline tl{{{kT0, kT0 + 600, OperatingState::normal}, {kT0 + 600, kT0 + 1200, OperatingState::anomalous}}};
  EXPECT_EQ(parse_noc(serialize_noc(tl)).intervals, tl.intervals);
}

TEST(Labels, RunsOfTrue) {
  const std::vector<std::uint8_t> y{0, 1, 1, 0, 1, 0, 0, 1};
  const auto runs = runs_of_true(y);
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[0], (RowRange{1, 3}));
  EXPECT_EQ(runs[1], (RowRange{4, 5}));
  EXPECT_EQ(runs[2], (RowRange{7, 8}));
}

TEST(Dataset, CsvRoundTripKeepsOrigins) {
  auto ds = align_labels(grid_frame(6), anomalous(120, 240));
  ds.add_column({"a_segment", ColumnOrigin::segment, {0, 0, 1, 1, 2, 2}});
  ds.add_column({"a_cp_freq", ColumnOrigin::cp_feature, {0, 0.5, 1, 1, 2, 1e-17}});
  const auto back = parse_dataset(serialize_dataset(ds));
  ASSERT_EQ(back.cols(), ds.cols());
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    EXPECT_EQ(back.columns[c].name, ds.columns[c].name);
    EXPECT_EQ(back.columns[c].origin, ds.columns[c].origin);
    EXPECT_EQ(back.columns[c].values, ds.columns[c].values);
  }
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.timestamps, ds.timestamps);
}

TEST(Dataset, AddColumnRejectsMismatch) {
  auto ds = align_labels(grid_frame(4), {});
  EXPECT_THROW(ds.add_column({"bad", ColumnOrigin::raw, {1, 2}}), RejectedInput);
  EXPECT_THROW(ds.add_column({"a", ColumnOrigin::raw, {1, 2, 3, 4}}), RejectedInput);
}

TEST(SelectFeatures, OriginSelectorAndGlob) {
  auto ds = align_labels(grid_frame(4), {});
  ds.add_column({"a_segment", ColumnOrigin::segment, {0, 0, 1, 1}});
  EXPECT_EQ(match_columns(ds, {"@segment"}), (std::vector<std::size_t>{2}));
  EXPECT_EQ(match_columns(ds, {"?"}), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(select_features(ds, {"nothing*"}), RejectedInput);
}
