#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("segad_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" SEGAD_CLI "' " + args + " >stdout.txt 2>stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "stdout.txt"), slurp(dir_ / "stderr.txt")};
  }

  // synth -> cpd -> featurize in the test directory.
  void prepare(const std::string& seed = "3") const {
    ASSERT_EQ(run("--seed " + seed + " --out s synth --rows 3000 --channels 4").code, 0);
    ASSERT_EQ(run("--seed " + seed + " --out c cpd --frame s/frame.csv").code, 0);
    ASSERT_EQ(run("--seed " + seed + " --out f featurize --frame s/frame.csv --noc s/noc.csv --cpd c").code, 0);
  }

  fs::path dir_;
};

nlohmann::json error_json(const Outcome& r) {
  const auto line = r.err.substr(r.err.rfind('{'));
  return nlohmann::json::parse(line);
}

}  // namespace

TEST_F(Cli, MissingSeedIsUsageError) {
  const auto r = run("--out x synth");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_json(r).at("kind"), "usage");
  EXPECT_EQ(error_json(r).at("exit_code"), 2);
}

TEST_F(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run("--seed 1 --out x synth --bogus 3").code, 2);
  EXPECT_EQ(run("--seed 1 --out x nosuchcommand").code, 2);
}

TEST_F(Cli, MissingFileIsIoError) {
  const auto r = run("--seed 1 --out x cpd --frame nope.csv");
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(error_json(r).at("kind"), "io_error");
}

TEST_F(Cli, SchemaMismatchExitCode) {
  prepare();
  std::ofstream(dir_ / "bad.json") << R"({"format":"segad-pipeline","version":99})";
  const auto r = run("--seed 1 --out x evaluate --model bad.json --dataset f/dataset.csv");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(error_json(r).at("kind"), "schema_mismatch");
  std::ofstream(dir_ / "garbage.json") << "not json";
  EXPECT_EQ(run("--seed 1 --out x evaluate --model garbage.json --dataset f/dataset.csv").code, 3);
}

TEST_F(Cli, RejectedInputExitCode) {
  const auto r = run("--seed 1 --out x synth --rows 1");
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(error_json(r).at("error").get<std::string>().find("n_rows"), std::string::npos);
  std::ofstream(dir_ / "bad.csv") << "timestamp,a\n2020-01-01T00:00:00Z,abc\n";
  const auto bad = run("--seed 1 --out x cpd --frame bad.csv");
  EXPECT_EQ(bad.code, 5);
  EXPECT_NE(error_json(bad).at("error").get<std::string>().find("column 'a'"), std::string::npos);
}

TEST_F(Cli, ResolvedConfigWrittenAndReplayable) {
  ASSERT_EQ(run("--seed 7 --out a synth --rows 800 --channels 2").code, 0);
  const auto ini = slurp(dir_ / "a/config.ini");
  EXPECT_NE(ini.find("seed=7\n"), std::string::npos);
  EXPECT_NE(ini.find("[synth]\n"), std::string::npos);
  EXPECT_NE(ini.find("rows=800\n"), std::string::npos);
  ASSERT_EQ(run("--config a/config.ini --out b synth").code, 0);
  EXPECT_EQ(slurp(dir_ / "a/frame.csv"), slurp(dir_ / "b/frame.csv"));
  EXPECT_EQ(slurp(dir_ / "a/manifest.json"), slurp(dir_ / "b/manifest.json"));
  EXPECT_EQ(ini, slurp(dir_ / "b/config.ini"));
  // Flags override config keys.
  ASSERT_EQ(run("--config a/config.ini --out c synth --rows 300").code, 0);
  EXPECT_NE(slurp(dir_ / "c/config.ini").find("rows=300\n"), std::string::npos);
}

TEST_F(Cli, EndToEndPipeline) {
  prepare();
  const auto frame_before = slurp(dir_ / "s/frame.csv");
  const auto dataset_before = slurp(dir_ / "f/dataset.csv");
  ASSERT_EQ(run("--seed 3 --out k cluster --dataset f/dataset.csv --max-points 300").code, 0);
  ASSERT_EQ(run("--seed 3 --out t train --dataset f/dataset.csv --spec baseline").code, 0);
  const auto ev = run("--seed 3 --out e evaluate --model t/pipeline.json --dataset f/dataset.csv --noc s/noc.csv");
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("ETP: "), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir_ / "e/report.json"));
  EXPECT_EQ(report.at("schema_version"), 1);
  EXPECT_EQ(report.at("model"), "baseline");
  ASSERT_EQ(run("--seed 3 --out i importance --model t/pipeline.json --dataset f/dataset.csv --repetitions 2").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "i/importance.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "i/categories.csv"));
  for (const char* d : {"s", "c", "f", "k", "t", "e", "i"}) EXPECT_TRUE(fs::exists(dir_ / d / "config.ini")) << d;
  EXPECT_EQ(slurp(dir_ / "s/frame.csv"), frame_before);
  EXPECT_EQ(slurp(dir_ / "f/dataset.csv"), dataset_before);
}

TEST_F(Cli, CompareFiveApproaches) {
  prepare();
  const auto r = run("--seed 3 --out m compare --dataset f/dataset.csv --specs baseline cp-features-all "
                     "cp-features-top3 pca+ocsvm ocsvm+rf");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = nlohmann::json::parse(slurp(dir_ / "m/comparison.json")).at("rows");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].at("approach"), "baseline");
  EXPECT_EQ(rows[0].at("f1_drop_pct"), 0.0);
  const auto csv = slurp(dir_ / "m/comparison.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "approach,auc_roc,f1,f1_drop_pct");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST_F(Cli, OutputsIndependentOfJobs) {
  prepare();
  for (const char* jobs : {"1", "4"}) {
    const std::string j = jobs;
    ASSERT_EQ(run("--seed 3 --jobs " + j + " --out j" + j + " train --dataset f/dataset.csv --spec ocsvm+gbt").code, 0);
    ASSERT_EQ(run("--seed 3 --jobs " + j + " --out j" + j + "/c cpd --frame s/frame.csv").code, 0);
  }
  EXPECT_EQ(slurp(dir_ / "j1/pipeline.json"), slurp(dir_ / "j4/pipeline.json"));
  EXPECT_EQ(slurp(dir_ / "j1/c/changepoints.json"), slurp(dir_ / "j4/c/changepoints.json"));
}
