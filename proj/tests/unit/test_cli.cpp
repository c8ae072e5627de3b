// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rr/cli.hpp"
#include "rr/construct.hpp"
#include "rr/harness/corpus.hpp"
#include "rr/wfsa_io.hpp"

namespace rr::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("rr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
  fs::path dir;
};

const char* kB =
    "WFSA 2 1 real\n"
    "I 0 1\n"
    "F 1 1\n"
    "T 0 0 a 1\n"
    "T 0 1 a 2\n"
    "T 1 1 a 0.5\n";

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(call({}).code, kExitUsage);
  EXPECT_EQ(call({"equiv", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(call({"nosuchcommand"}).code, kExitUsage);
  EXPECT_EQ(call({"equiv", "equiv.no_such_key=1"}).code, kExitUsage);
  EXPECT_EQ(call({"equiv", "not_a_pair"}).code, kExitUsage);
  // --semiring does not apply to equiv.
  EXPECT_EQ(call({"equiv", "--semiring", "real"}).code, kExitUsage);
  EXPECT_EQ(call({"wfsa", "score", "--automaton", (dir / "missing.wfsa").string(), "--input", "a"}).code, kExitUsage);
}

TEST_F(CliTest, WfsaScoreCheckDot) {
  const std::string path = write("b.wfsa", kB);
  Outcome r = call({"wfsa", "score", "--automaton", path, "--input", "a a"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "3\n");
  r = call({"wfsa", "check", "--automaton", path, "--input", "a a a"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  r = call({"wfsa", "dot", "--automaton", path});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("digraph"), std::string::npos);
  r = call({"wfsa", "score", "--automaton", path, "--input", "a a", "--semiring", "maxplus"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "5\n");  // init 1 + arcs 1 and 2 + final 1
  const std::string bad = write("bad.wfsa", "WFSA 1 1 real\nT 0 0 a nope\n");
  r = call({"wfsa", "score", "--automaton", bad, "--input", "a"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST_F(CliTest, EquivPasses) {
  const Outcome r = call({"equiv", "--cell", "rrnn_b", "--trials", "100", "--seed", "7"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("pass: true"), std::string::npos);
  EXPECT_EQ(call({"equiv", "equiv.check=f_dp", "--trials", "10"}).code, kExitOk);
}

TEST_F(CliTest, EquivFailureExitsOne) {
  // F accumulates rounding differences, so a sub-ulp tolerance fails.
  const Outcome r = call({"equiv", "--cell", "rrnn_f", "--tol", "1e-300", "--trials", "5"});
  EXPECT_EQ(r.code, kExitCheckFailed);
  EXPECT_NE(r.out.find("pass: false"), std::string::npos);
}

TEST_F(CliTest, ConstructFromJson) {
  WeightTables t;
  t.alphabet_size = 1;
  t.mu = {{2.0}};
  t.phi = {{0.5}};
  const std::string path = write("b.json", tables_to_json(t));
  const Outcome r = call({"construct", "--family", "B", "--tables", path});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Wfsa a = import_text(r.out);
  EXPECT_DOUBLE_EQ(forward(a, std::vector<Symbol>{0, 0}), 3.0);
}

TEST_F(CliTest, Gradcheck) {
  const Outcome r = call({"gradcheck", "--cell", "rrnn_f"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("pass"), std::string::npos);
}

TEST_F(CliTest, TrainLmSnapshotReproduces) {
  const std::vector<std::string> tiny{"data.synthetic=bigram_lm", "data.train_size=600", "data.dev_size=100",
                                      "data.test_size=100", "train.hidden=8", "train.epochs=2",
                                      "train.batch_size=4"};
  std::vector<std::string> args{"train-lm", "--out", (dir / "a").string()};
  args.insert(args.end(), tiny.begin(), tiny.end());
  Outcome r = call(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"config.ini", "metrics.csv", "train.log"}) EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;

  r = call({"train-lm", "--config", (dir / "a" / "config.ini").string(), "--out", (dir / "b").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(harness::read_file((dir / "a" / "metrics.csv").string()),
            harness::read_file((dir / "b" / "metrics.csv").string()));
  EXPECT_EQ(harness::read_file((dir / "a" / "config.ini").string()),
            harness::read_file((dir / "b" / "config.ini").string()));

  // Flags override the file, key=value overrides the flags.
  r = call({"train-lm", "--config", (dir / "a" / "config.ini").string(), "--out", (dir / "c").string(), "--seed",
            "5", "train.seed=9"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(harness::read_file((dir / "c" / "config.ini").string()).find("seed=9"), std::string::npos);
}

TEST_F(CliTest, TrainClassifyWritesSummary) {
  const Outcome r = call({"train-classify", "--out", (dir / "k").string(), "data.synthetic=bigram_detect",
                          "data.train_size=100", "data.dev_size=20", "data.test_size=20", "train.hidden=8",
                          "train.epochs=1", "classify.seeds=1,2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "k" / "metrics_seed1.csv"));
  EXPECT_TRUE(fs::exists(dir / "k" / "metrics_seed2.csv"));
  EXPECT_NE(harness::read_file((dir / "k" / "summary.csv").string()).find("accuracy_mean"), std::string::npos);
}

}  // namespace
}  // namespace rr::cli
