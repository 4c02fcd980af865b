// Copyright 2026 The zipar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/cli.h"
#include "json.hpp"

namespace zipar::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() /
                     ("zipar_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                      "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(d);
  return d;
}

const fs::path kGolden = ZIPAR_GOLDEN_DIR;

TEST(ParseIntListTest, Forms) {
  EXPECT_EQ(parse_int_list("3"), (std::vector<long long>{3}));
  EXPECT_EQ(parse_int_list("1,4,9"), (std::vector<long long>{1, 4, 9}));
  EXPECT_EQ(parse_int_list("2..5"), (std::vector<long long>{2, 3, 4, 5}));
  EXPECT_EQ(parse_int_list("1,3..4,8"), (std::vector<long long>{1, 3, 4, 8}));
  EXPECT_ANY_THROW(parse_int_list(""));
  EXPECT_ANY_THROW(parse_int_list("5..2"));
  EXPECT_ANY_THROW(parse_int_list("a"));
}

TEST(CliTest, PlanGolden) {
  const CliRun r = run_cli({"plan", "--rows", "4", "--cols", "5", "--window", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "plan_4x5_s2.txt"));
  EXPECT_NE(r.err.find("steps=11"), std::string::npos) << r.err;
}

TEST(CliTest, PlanFullGrid) {
  const CliRun r = run_cli({"plan", "--rows", "24", "--cols", "24", "--window", "24"});
  ASSERT_EQ(r.code, kExitOk);
  const auto doc = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  EXPECT_EQ(doc["total_steps"], 576);
  EXPECT_EQ(doc["ntp_steps"], 576);
}

TEST(CliTest, GenerateGolden) {
  const std::vector<std::string> args{"generate", "--mode", "adaptive", "--rows", "4", "--cols", "5",
                                      "--min-window", "2", "--backend", "oracle", "--vocab", "16",
                                      "--seed", "3"};
  const CliRun a = run_cli(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, slurp(kGolden / "generate_adaptive_oracle.json"));
  const CliRun b = run_cli(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.err, b.err);
}

TEST(CliTest, ToyGenerateGolden) {
  const CliRun a = run_cli({"generate", "--mode", "fixed", "--rows", "3", "--cols", "4", "--window", "2",
                         "--backend", "toy", "--vocab", "32", "--width", "16", "--heads", "2",
                         "--prefix", "5", "--seed", "11"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, slurp(kGolden / "generate_fixed_toy.json"));
}

TEST(CliTest, FixedSummaryLine) {
  const CliRun r = run_cli({"generate", "--mode", "fixed", "--rows", "2", "--cols", "3", "--window", "1",
                         "--backend", "oracle", "--vocab", "16"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("mode=fixed window=1 steps=4 ntp=6"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("seed=0"), std::string::npos);
}

TEST(CliTest, UsageErrorsExitTwo) {
  CliRun r = run_cli({"generate", "--rows", "2", "--cols", "3"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--mode"), std::string::npos) << r.err;
  r = run_cli({"generate", "--mode", "fixed", "--rows", "2", "--cols", "3"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--window"), std::string::npos) << r.err;
  r = run_cli({"generate", "--mode", "fixed", "--rows", "2", "--cols", "3", "--window", "9"});
  EXPECT_EQ(r.code, kExitUsage);
  r = run_cli({"compare", "--rows", "2", "--cols", "3", "--modes", "ntp"});
  EXPECT_EQ(r.code, kExitUsage);
  r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  r = run_cli({"plan", "--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("--window"), std::string::npos);
}

TEST(CliTest, RuntimeErrorsExitOne) {
  const fs::path d = temp_dir();
  const CliRun r = run_cli({"render", (d / "missing.json").string(), (d / "x.pgm").string()});
  EXPECT_EQ(r.code, kExitRuntime) << r.err;
}

TEST(CliTest, ConfigFileWithOverride) {
  const fs::path d = temp_dir();
  {
    std::ofstream cfg(d / "run.json");
    cfg << R"({"mode": "fixed", "rows": 2, "cols": 3, "window": 1, "backend": "oracle", "vocab": 16})";
  }
  CliRun r = run_cli({"generate", "--config", (d / "run.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("steps=4"), std::string::npos);
  r = run_cli({"generate", "--config", (d / "run.json").string(), "--window", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("steps=6"), std::string::npos) << r.err;
  {
    std::ofstream cfg(d / "bad.json");
    cfg << R"({"mode": "fixed", "colour": 3})";
  }
  EXPECT_EQ(run_cli({"generate", "--config", (d / "bad.json").string()}).code, kExitUsage);
}

TEST(CliTest, RenderWritesPgm) {
  const fs::path d = temp_dir();
  const CliRun g = run_cli({"generate", "--mode", "ntp", "--rows", "2", "--cols", "3", "--backend",
                         "oracle", "--vocab", "16", "--seed", "4", "--out", (d / "g.json").string()});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  const CliRun r = run_cli({"render", (d / "g.json").string(), (d / "g.pgm").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string pgm = slurp(d / "g.pgm");
  const std::string header = "P5\n# seed 4\n3 2\n255\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(pgm.size(), header.size() + 6);
  const auto grid = nlohmann::json::parse(slurp(d / "g.json"));
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size()]), grid["tokens"][0].get<int>() % 256);
}

TEST(CliTest, AnalyzeStepsGolden) {
  const CliRun r = run_cli({"analyze", "steps", "--grids", "4x4,6x5", "--windows", "1..3", "--eor"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "analyze_steps.txt"));
}

TEST(CliTest, AnalyzeAttention) {
  const CliRun r = run_cli({"analyze", "attention", "--rows", "4", "--cols", "4", "--vocab", "32",
                         "--width", "16", "--heads", "2", "--seed", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("# seed=2\nrow,min_window\n", 0), 0u) << r.out;
  std::istringstream lines(r.out);
  std::string line;
  int data = 0;
  while (std::getline(lines, line)) data += (!line.empty() && line[0] != '#' && line[0] != 'r');
  EXPECT_EQ(data, 3);
}

TEST(CliTest, CompareOracleIsExact) {
  const CliRun r = run_cli({"compare", "--rows", "3", "--cols", "4", "--backend", "oracle", "--vocab",
                         "16", "--radius", "1", "--windows", "1..4", "--seeds", "0,1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("mean_tv=0"), std::string::npos) << r.err;
}

TEST(BinaryTest, ExitCodes) {
  const std::string bin = ZIPAR_BIN;
  EXPECT_EQ(std::system((bin + " plan --rows 2 --cols 2 --window 1 > /dev/null 2>&1").c_str()), 0);
  const int usage = std::system((bin + " plan --rows 2 > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(usage));
  EXPECT_EQ(WEXITSTATUS(usage), 2);
  const int runtime = std::system((bin + " render /nonexistent/g.json /tmp/x.pgm > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(runtime));
  EXPECT_EQ(WEXITSTATUS(runtime), 1);
}

}  // namespace
}  // namespace zipar::cli
