#include <gtest/gtest.h>

#include <filesystem>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiou/cli.hpp"
#include "epiou/io.hpp"

using namespace epiou;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("epiou_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int rc = cli::run(args, out, err);
    if (err_text) *err_text = err.str();
    return rc;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, SimulateOuIsReproducible) {
    const auto a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
    const std::vector<std::string> common{"simulate", "--model", "ou", "--k", "2", "--mu", "0.5", "--noise", "1", "--n", "100", "--seed", "9"};
    auto args_a = common, args_b = common;
    args_a.insert(args_a.end(), {"--out", a.string()});
    args_b.insert(args_b.end(), {"--out", b.string()});
    ASSERT_EQ(run_cli(args_a), cli::kOk);
    ASSERT_EQ(run_cli(args_b), cli::kOk);
    EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(a / "manifest.json"));
    EXPECT_TRUE(fs::exists(a / "config.json"));
    const auto tr = read_trajectory_csv(a / "trajectory.csv");
    EXPECT_EQ(tr.values.size(), 101u);
}

TEST(Cli, ConfigFileRerunIsByteIdentical) {
    const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
    ASSERT_EQ(run_cli({"simulate", "--model", "sis", "--r0", "1.5", "--gamma", "1", "--sigma", "500", "--n", "50",
                       "--thresholds", "300", "--seed", "4", "--out", a.string()}),
              cli::kOk);
    ASSERT_EQ(run_cli({"simulate", "--config", (a / "config.json").string(), "--out", b.string()}), cli::kOk);
    EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
    EXPECT_EQ(slurp(a / "series.csv"), slurp(b / "series.csv"));
}

TEST(Cli, FlagsOverrideConfig) {
    const auto d = fresh_dir("override");
    write_json(d / "c.json", nlohmann::json{{"model", "ou"}, {"k", 1.0}, {"mu", 1.0}, {"noise", 1.0}, {"n", 10}});
    ASSERT_EQ(run_cli({"simulate", "--config", (d / "c.json").string(), "--n", "20", "--out", (d / "o").string()}), cli::kOk);
    EXPECT_EQ(read_trajectory_csv(d / "o" / "trajectory.csv").values.size(), 21u);
}

TEST(Cli, FitReportsEstimates) {
    const auto d = fresh_dir("fit");
    ASSERT_EQ(run_cli({"simulate", "--model", "sis", "--r0", "2", "--gamma", "1", "--sigma", "2000", "--n", "2000",
                       "--seed", "2", "--out", d.string()}),
              cli::kOk);
    ASSERT_EQ(run_cli({"fit", "--input", (d / "trajectory.csv").string(), "--map", "sis", "--out", (d / "fit").string()}),
              cli::kOk);
    const auto report = read_json(d / "fit" / "report.json");
    EXPECT_NEAR(report["sis"]["r0"].get<double>(), 2.0, 0.1);
    EXPECT_EQ(report["n_transitions"].get<int>(), 2000);
}

TEST(Cli, ExitCodes) {
    const auto d = fresh_dir("codes");
    std::string err;
    EXPECT_EQ(run_cli({"simulate", "--model", "ou", "--k", "1", "--mu", "1", "--n", "10", "--out", d.string()}, &err),
              cli::kConfigError);
    EXPECT_NE(err.find("noise"), std::string::npos);
    EXPECT_EQ(run_cli({"simulate", "--bogus", "1"}), cli::kConfigError);
    EXPECT_EQ(run_cli({"fit", "--input", (d / "missing.csv").string(), "--out", d.string()}), cli::kIoError);
    write_json(d / "bad.json", nlohmann::json{{"model", "ou"}, {"unknown_key", 3}});
    EXPECT_EQ(run_cli({"simulate", "--config", (d / "bad.json").string(), "--out", d.string()}), cli::kConfigError);
    write_json(d / "typed.json", nlohmann::json{{"model", "ou"}, {"k", "one"}});
    EXPECT_EQ(run_cli({"simulate", "--config", (d / "typed.json").string(), "--out", d.string()}), cli::kConfigError);
    EXPECT_EQ(run_cli({"simulate", "--model", "sis", "--r0", "1.5", "--gamma", "-1", "--sigma", "100", "--n", "5",
                       "--out", d.string()}),
              cli::kConfigError);
}

TEST(Cli, DegradedGridWhenNothingIsFinite) {
    const auto d = fresh_dir("degraded");
    // An extinct state cannot reinfect, so every grid point has zero likelihood.
    write_trajectory_csv(d / "traj.csv", Trajectory{0.0, 1.0, {5, 0, 3, 4}, 0});
    const int rc = run_cli({"grid", "--kind", "full_state", "--input", (d / "traj.csv").string(), "--sigma-pop", "100",
                            "--x-lo", "1.5", "--x-hi", "3", "--x-n", "3", "--y-lo", "0.5", "--y-hi", "1", "--y-n", "3",
                            "--out", (d / "g").string()});
    EXPECT_EQ(rc, cli::kDegraded);
    EXPECT_TRUE(fs::exists(d / "g" / "manifest.json"));
}

TEST(Cli, GridWritesNormalizedMasses) {
    const auto d = fresh_dir("grid");
    ASSERT_EQ(run_cli({"simulate", "--model", "ou", "--k", "1", "--mu", "0.5", "--noise", "1", "--n", "400",
                       "--thresholds", "2.2", "--seed", "6", "--out", d.string()}),
              cli::kOk);
    ASSERT_EQ(run_cli({"grid", "--kind", "pseudo", "--input", (d / "series.csv").string(), "--thresholds", "2.2",
                       "--beta", "0.6065306597126334", "--x-lo", "1", "--x-hi", "3", "--x-n", "11", "--y-lo", "0.5",
                       "--y-hi", "4", "--y-n", "9", "--singular-overlay", "--true-alpha", "2", "--true-gamma",
                       "1.5819767068693265", "--out", (d / "g").string()}),
              cli::kOk);
    const auto meta = read_json(d / "g" / "grid.json");
    EXPECT_TRUE(meta.contains("argmax"));
    std::ifstream in(d / "g" / "grid.csv");
    std::string line;
    std::getline(in, line);
    double total = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        while (std::getline(ss, cell, ',')) total += std::strtod(cell.c_str(), nullptr);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_TRUE(fs::exists(d / "g" / "overlay.csv"));
}

TEST(Cli, SelftestPasses) {
    std::ostringstream out, err;
    EXPECT_EQ(cli::run({"selftest", "--seed", "3"}, out, err), cli::kOk);
    EXPECT_NE(out.str().find("PASS"), std::string::npos);
    EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
}

TEST(Cli, AbcSmallRunWritesGenerations) {
    const auto d = fresh_dir("abc");
    const int rc = run_cli({"abc", "--self-data", "--nodes", "8", "--tend", "140", "--particles", "20", "--generations",
                            "2", "--eps1", "100", "--seed", "5", "--threads", "2", "--out", d.string()});
    ASSERT_TRUE(rc == cli::kOk || rc == cli::kDegraded) << rc;
    EXPECT_TRUE(fs::exists(d / "manifest.json"));
    EXPECT_TRUE(fs::exists(d / "acceptance.csv"));
    if (rc == cli::kOk) {
        const auto pop = read_abc_generation_csv(d / "generation_02.csv", 2);
        EXPECT_EQ(pop.particles.size(), 20u);
    }
}
