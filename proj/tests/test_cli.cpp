// Copyright 2026 The aklt-prep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "aklt/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
    int code = -1;
    std::string output;
};

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("aklt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(const std::string &args) const {
        const auto log = dir_ / "stdout.txt";
        const std::string cmd = std::string(AKLT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
    }

    static std::string slurp(const fs::path &p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path write(const std::string &name, const std::string &text) const {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    std::string out(const std::string &sub) const { return (dir_ / sub).string(); }

    fs::path dir_;
};

TEST_F(Cli, StringOrderCsvIsByteIdenticalAcrossRuns) {
    const std::string args = "string-order --N 6 --prep fusion --shots 100000 --seed 7 --out ";
    ASSERT_EQ(run(args + out("a")).code, 0);
    ASSERT_EQ(run(args + out("b")).code, 0);
    const auto a = slurp(dir_ / "a" / "string_order.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b" / "string_order.csv"));
    // Provenance line, schema header, one row per span (15 for N = 6).
    std::istringstream lines(a);
    std::string first, header, row;
    std::getline(lines, first);
    std::getline(lines, header);
    ASSERT_EQ(first.rfind("# ", 0), 0u);
    const auto meta = json::parse(first.substr(2));
    EXPECT_EQ(meta["version"], aklt::kVersion);
    EXPECT_EQ(meta["seed"], 7);
    EXPECT_EQ(meta["config"]["shots"], 100000);
    EXPECT_EQ(header, "method,N,i,l,value,stderr,shots,seed");
    int rows = 0;
    while (std::getline(lines, row)) ++rows;
    EXPECT_EQ(rows, 15);
    // A different seed changes the estimates.
    ASSERT_EQ(run("string-order --N 6 --prep fusion --shots 100000 --seed 8 --out " + out("c")).code, 0);
    EXPECT_NE(a, slurp(dir_ / "c" / "string_order.csv"));
}

TEST_F(Cli, ExactSpectrumFitsAkltCorrelationLength) {
    const auto r = run("spectrum --prep fusion --lmax 8 --exact --out " + out("s"));
    ASSERT_EQ(r.code, 0) << r.output;
    const auto fit = json::parse(slurp(dir_ / "s" / "spectrum_fit.json"));
    const double xi = fit["result"]["xi"].get<double>();
    const double target = 1.0 / std::log(3.0);
    EXPECT_LT(std::abs(xi - target) / target, 5e-3) << xi;
    EXPECT_EQ(fit["config"]["lmax"], 8);
    const auto csv = slurp(dir_ / "s" / "spectrum.csv");
    EXPECT_NE(csv.find("method,l,eigenvalue_index,lambda,minus_ln_lambda\n"), std::string::npos);
}

TEST_F(Cli, SelftestExitCodeReflectsCriteria) {
    const auto r = run("selftest --criteria 2,6,7,12");
    EXPECT_EQ(r.code, 0) << r.output;
    int pass = 0;
    for (std::size_t at = r.output.find("PASS"); at != std::string::npos; at = r.output.find("PASS", at + 1)) ++pass;
    EXPECT_EQ(pass, 4);
    EXPECT_EQ(r.output.find("FAIL"), std::string::npos);
    EXPECT_EQ(run("selftest --criteria 13").code, 2);
}

TEST_F(Cli, InvalidConfigExitsNonzeroWithMessage) {
    const auto unknown = run("string-order --config " + write("bad.json", R"({"N": 4, "bogus": 1})").string());
    EXPECT_EQ(unknown.code, 2);
    EXPECT_NE(unknown.output.find("bogus"), std::string::npos);
    EXPECT_EQ(run("string-order --config " + write("broken.json", "{\"N\": ").string()).code, 2);
    EXPECT_EQ(run("string-order --config " + write("type.json", R"({"N": "six"})").string()).code, 2);
    EXPECT_EQ(run("string-order --config " + write("cmd.json", R"({"command": "teleport"})").string()).code, 2);
    EXPECT_EQ(run("string-order --config /nonexistent/config.json").code, 2);
    EXPECT_EQ(run("string-order --prep magic").code, 2);
    EXPECT_EQ(run("string-order --N 0").code, 2);
    EXPECT_EQ(run("string-order --bogus-flag").code, 2);
    EXPECT_EQ(run("prepare --N 4 --exact --forced-outcomes 7").code, 2);
    EXPECT_EQ(run("prepare --N 4 --exact --forced-outcomes 1,1").code, 2);
    EXPECT_EQ(run("string-order --noise " + write("noise.json", R"({"p2": 2.0})").string()).code, 2);
    EXPECT_NE(run("").code, 0);
}

TEST_F(Cli, ZeroProbabilityForcedOutcomeHasDistinctExitCode) {
    // The edge SWAP test on a one-site chain never reports antisymmetric.
    const auto r = run("prepare --prep swap-fusion --N 1 --exact --forced-outcomes 1 --out " + out("z"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.output.find("zero-probability"), std::string::npos);
    EXPECT_EQ(run("prepare --prep swap-fusion --N 1 --exact --forced-outcomes 0 --out " + out("z")).code, 0);
}

TEST_F(Cli, ConfigFileWithFlagOverrides) {
    const auto cfg = write("cfg.json", R"({"N": 3, "seed": 5, "prep": "sequential", "shots": 2000,
                                          "noise": {"p_ro": 0.01}})");
    ASSERT_EQ(run("string-order --config " + cfg.string() + " --N 4 --out " + out("o")).code, 0);
    std::istringstream lines(slurp(dir_ / "o" / "string_order.csv"));
    std::string first;
    std::getline(lines, first);
    const auto meta = json::parse(first.substr(2));
    EXPECT_EQ(meta["config"]["N"], 4);
    EXPECT_EQ(meta["config"]["seed"], 5);
    EXPECT_EQ(meta["config"]["prep"], "sequential");
    EXPECT_DOUBLE_EQ(meta["config"]["noise"]["p_ro"].get<double>(), 0.01);
}

TEST_F(Cli, PrepareReportsDepthAndExactFidelity) {
    // Frame-mode fusion has depth 5 at every N; the fidelity is that of the
    // unitary-corrected state.
    ASSERT_EQ(run("prepare --N 6 --prep fusion --exact --forced-outcomes 1,2 --out " + out("p")).code, 0);
    const auto doc = json::parse(slurp(dir_ / "p" / "prepare.json"));
    EXPECT_EQ(doc["version"], aklt::kVersion);
    EXPECT_EQ(doc["result"]["depth"], 5);
    EXPECT_EQ(doc["result"]["num_qubits"], 18);
    EXPECT_EQ(doc["result"]["fusions"].size(), 2u);
    EXPECT_EQ(doc["result"]["fusions"][0]["bell"], "Phi-");
    EXPECT_GT(doc["result"]["fidelity"].get<double>(), 1 - 1e-10);
    ASSERT_EQ(run("prepare --N 7 --prep sequential --out " + out("q")).code, 0);
    EXPECT_EQ(json::parse(slurp(dir_ / "q" / "prepare.json"))["result"]["depth"], 11);
}

TEST_F(Cli, TeleportAndVariantArtifacts) {
    ASSERT_EQ(run("teleport --N 3 --exact --target T --seed 4 --out " + out("t")).code, 0);
    const auto tel = json::parse(slurp(dir_ / "t" / "teleport.json"));
    for (const char *key : {"N", "psi", "prep", "raw_fidelity", "purified_fidelity", "lambda_histogram", "acceptance_rate", "seed"})
        EXPECT_TRUE(tel["result"].contains(key)) << key;
    EXPECT_NEAR(tel["result"]["raw_fidelity"].get<double>(), 1.0, 1e-10);
    EXPECT_EQ(tel["seed"], 4);
    EXPECT_EQ(run("teleport --N 3 --target nowhere").code, 2);

    ASSERT_EQ(run("variants --variant ghz --N 6 --forced-outcomes 3 --out " + out("v")).code, 0);
    const auto var = json::parse(slurp(dir_ / "v" / "variants.json"));
    EXPECT_EQ(var["result"]["num_qubits"], 6);
    EXPECT_EQ(var["result"]["recycled"], 2);
    EXPECT_GT(var["result"]["fidelity"].get<double>(), 1 - 1e-10);
}

TEST_F(Cli, NoiseSweepWritesOneRowPerMethodAndRate) {
    const auto noise = write("noise.json", R"({"p_ro": 0.01})");
    ASSERT_EQ(run("noise-sweep --N 4 --shots 2000 --p2-grid 0,0.02 --noise " + noise.string() + " --out " + out("n")).code, 0);
    std::istringstream lines(slurp(dir_ / "n" / "noise_sweep.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(lines, line))
        if (line.rfind("sequential,", 0) == 0 || line.rfind("fusion,", 0) == 0) ++rows;
    EXPECT_EQ(rows, 4);
}

} // namespace
