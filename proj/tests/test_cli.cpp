#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hypocx/cli.hpp"

namespace fs = std::filesystem;
using hypocx::cli::RunOptions;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("hypocx_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string config(const std::string& text) {
        const auto p = dir_ / "run.cfg";
        std::ofstream(p) << text;
        return p.string();
    }
    int run(const std::string& sub, const std::string& cfg, const std::string& out, unsigned threads = 0) {
        RunOptions o;
        o.subcommand = sub;
        o.config_path = cfg;
        o.out_dir = (dir_ / out).string();
        o.threads = threads;
        std::ostringstream err;
        const int code = hypocx::cli::run(o, err);
        last_err_ = err.str();
        return code;
    }
    nlohmann::json manifest(const std::string& out) {
        std::ifstream in(dir_ / out / "manifest.json");
        return nlohmann::json::parse(in);
    }
    std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    fs::path dir_;
    std::string last_err_;
};

} // namespace

TEST_F(CliTest, ApplyDiskOracleWritesCsvAndManifest) {
    const auto cfg = config("sigma = 0\ngrid.sizes = 96\ndomain.x_min = -1.5\ndomain.x_max = 1.5\n"
                            "domain.t_min = -1.5\ndomain.t_max = 1.5\napply.rhs = disk_indicator\n"
                            "apply.targets = 0:0, 0.5:0\napply.oracle = disk\napply.oracle_tol = 0.05\n");
    ASSERT_EQ(run("apply", cfg, "out"), 0) << last_err_;
    const auto m = manifest("out");
    EXPECT_EQ(m["exit_code"], 0);
    EXPECT_EQ(m["subcommand"], "apply");
    EXPECT_EQ(m["assertions"].size(), 2u);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "apply.csv"));
    const auto csv = slurp(dir_ / "out" / "apply.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\r')), "x,t,re,im,cells,error,converged,oracle_re,oracle_im,relative_error");
}

TEST_F(CliTest, UnknownKeyIsConfigError) {
    ASSERT_EQ(run("apply", config("sigma = 1\nsigmaa = 2\n"), "out"), 2);
    EXPECT_NE(last_err_.find("sigmaa"), std::string::npos);
    const auto m = manifest("out");
    EXPECT_EQ(m["exit_code"], 2);
    EXPECT_TRUE(m.contains("error"));
}

TEST_F(CliTest, ConfigAndIoErrors) {
    EXPECT_EQ(run("apply", (dir_ / "missing.cfg").string(), "out"), 2);
    EXPECT_EQ(run("bogus", config("sigma = 1\n"), "out2"), 2);
    EXPECT_EQ(run("apply", config("grid.sizes = 64, 32\n"), "out3"), 2);
    EXPECT_EQ(run("semilinear", config("p = 2.5\n"), "out4"), 2);
    EXPECT_EQ(run("apply", config("apply.rhs = nothing\n"), "out5"), 2);
    std::ofstream(dir_ / "file") << "x";
    EXPECT_EQ(run("apply", config("sigma = 1\n"), "file"), 2);
}

TEST_F(CliTest, FailedAssertionExitsOne) {
    const auto cfg = config("sigma = 1\ngrid.sizes = 32\nsemilinear.n = 32\nsemilinear.max_residual = 1e-12\n");
    EXPECT_EQ(run("semilinear", cfg, "out"), 1);
    bool any_fail = false;
    const auto m = manifest("out");
    for (const auto& a : m["assertions"]) any_fail = any_fail || !a["pass"].get<bool>();
    EXPECT_TRUE(any_fail);
}

TEST_F(CliTest, CsvOutputsBitwiseIdenticalAcrossThreads) {
    const auto cfg = config("sigma = 1\nsemilinear.n = 48\nsemilinear.max_residual = 1\n"
                            "semilinear.max_ratio = 1\n");
    ASSERT_EQ(run("semilinear", cfg, "a", 1), 0) << last_err_;
    ASSERT_EQ(run("semilinear", cfg, "b", 3), 0) << last_err_;
    for (const char* f : {"semilinear.csv", "semilinear_iterations.csv"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, CounterexampleSmall) {
    const auto cfg = config("sigma = 1\ncounterexample.n = 128\ncounterexample.refine = 64, 128\n"
                            "counterexample.max_residual = 0.05\n");
    ASSERT_EQ(run("counterexample", cfg, "out"), 0) << last_err_;
    EXPECT_TRUE(fs::exists(dir_ / "out" / "counterexample_norms.csv"));
}

TEST_F(CliTest, LemmasCustomGrid) {
    const auto cfg = config("lemmas.which = I\nlemmas.I.R = 1, 2\nlemmas.I.gamma = 0, 0.5, 1\n");
    ASSERT_EQ(run("lemmas", cfg, "out"), 0) << last_err_;
    const auto m = manifest("out");
    bool scaling = false;
    for (const auto& a : m["assertions"]) scaling = scaling || a["name"] == "lemmas.I.scaling";
    EXPECT_TRUE(scaling);
    EXPECT_EQ(run("lemmas", config("lemmas.which = J\n"), "out2"), 2);
}

TEST_F(CliTest, VerifyWithZeroRhs) {
    const auto cfg = config("sigma = 1\ngrid.sizes = 16, 32\nverify.rhs = zero\n");
    ASSERT_EQ(run("verify", cfg, "out"), 0) << last_err_;
    EXPECT_TRUE(fs::exists(dir_ / "out" / "verify.csv"));
}

TEST_F(CliTest, ManifestWrittenOnFailure) {
    EXPECT_EQ(run("apply", (dir_ / "missing.cfg").string(), "out"), 2);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
    EXPECT_FALSE(last_err_.empty());
}
