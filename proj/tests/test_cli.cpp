#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridsync/cli.hpp"
#include "gridsync/grid.hpp"
#include "test_support.hpp"

using namespace gridsync;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliResult result;
    result.code = run_cli(args, out, err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

std::string twobus() { return (support::data_dir() / "twobus.json").string(); }

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) parts.push_back(item);
    return parts;
}

std::vector<std::string> lines(const std::string& text) { return split(text, '\n'); }

std::filesystem::path write_grid(const Grid& grid, const std::string& name) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << grid_to_json(grid).dump();
    return path;
}

/// Column `name` of the last data row of a CSV document.
double last_value(const std::string& csv, const std::string& name) {
    const auto rows = lines(csv);
    const auto header = split(rows.front(), ',');
    const auto values = split(rows.back(), ',');
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return std::stod(values[i]);
    }
    ADD_FAILURE() << "missing column " << name;
    return 0.0;
}

}  // namespace

TEST(CliAnalyze, TwoBusSwingCost) {
    const auto result = run({"analyze", "--grid", twobus(), "--model", "swing", "--step", "bus=0,mag=1"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto report = nlohmann::json::parse(result.out);
    EXPECT_EQ(report.at("schema"), "gridsync-report/1");
    EXPECT_NEAR(report.at("metrics").at("sync_cost").at("value").get<double>(), 0.35355, 1e-5);
    EXPECT_EQ(report.at("metrics").at("sync_cost").at("method"), "closed_form");
    EXPECT_TRUE(report.at("cross_checks_passed").get<bool>());
}

TEST(CliAnalyze, TwoBusTurbineNadir) {
    const auto result = run({"analyze", "--grid", twobus(), "--model", "turbine", "--step", "bus=0,mag=1"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto nadir = nlohmann::json::parse(result.out).at("metrics").at("nadir");
    EXPECT_NEAR(nadir.at("value").get<double>(), 0.30197, 1e-5);
    EXPECT_NEAR(nadir.at("time").get<double>(), 1.5708, 1e-4);
}

TEST(CliAnalyze, ValidationErrors) {
    auto result = run({"analyze", "--grid", twobus(), "--step", "bus=0,mag=1"});
    EXPECT_EQ(result.code, 2);
    EXPECT_NE(result.err.find("--model"), std::string::npos);
    EXPECT_EQ(run({"analyze", "--grid", twobus(), "--model", "swing", "--step", "bus=7,mag=1"}).code, 2);
    EXPECT_EQ(run({"analyze", "--grid", "/nonexistent.json", "--model", "swing", "--step", "bus=0,mag=1"}).code, 2);
    EXPECT_EQ(run({"analyze", "--grid", twobus(), "--model", "swing", "--sigma", "Q"}).code, 2);
    EXPECT_EQ(run({"analyze", "--bogus"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliAnalyze, ByteStable) {
    const std::vector<std::string> args{"analyze", "--grid", twobus(), "--model", "turbine", "--sigma", "F"};
    const auto first = run(args);
    ASSERT_EQ(first.code, 0) << first.err;
    EXPECT_EQ(first.out, run(args).out);
}

TEST(CliSimulate, TwoBusTerminalCoi) {
    const auto result = run({"simulate", "--grid", twobus(), "--model", "swing", "--step", "bus=0,mag=1",
                             "--stride", "100"});
    ASSERT_EQ(result.code, 0) << result.err;
    EXPECT_EQ(lines(result.out).front(), "t,theta_1,theta_2,w_1,w_2,coi,wtilde_1,wtilde_2");
    EXPECT_NEAR(last_value(result.out, "coi"), 0.5, 1e-6);
}

TEST(CliSimulate, TrueParamsShareSteadyState) {
    std::mt19937_64 gen(91);
    const auto path = write_grid(support::random_heterogeneous_grid(gen, 4), "gridsync_cli_hetero.json");
    const auto result = run({"simulate", "--grid", path.string(), "--model", "turbine", "--step", "bus=1,mag=-1",
                             "--true-params", "--stride", "1000"});
    ASSERT_EQ(result.code, 0) << result.err;
    double lo = 1e300, hi = -1e300;
    for (int i = 1; i <= 4; ++i) {
        const double w = last_value(result.out, "w_" + std::to_string(i));
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    EXPECT_LT(hi - lo, 1e-6);
    std::filesystem::remove(path);
}

TEST(CliSimulate, CoarseStepWarns) {
    const auto path = write_grid(support::two_bus(0.05, 1, 0.05, 1, 20.0), "gridsync_cli_fast.json");
    const auto result = run({"simulate", "--grid", path.string(), "--model", "swing", "--step", "bus=0,mag=1",
                             "--dt", "0.01", "--t-end", "0.1", "--format", "json"});
    EXPECT_EQ(result.code, 0);
    EXPECT_NE(result.err.find("warning: dt exceeds 0.1× min time constant"), std::string::npos);
    std::filesystem::remove(path);
}

TEST(CliSweep, NadirDecreasesInInertia) {
    const auto result = run({"sweep", "--grid", twobus(), "--model", "turbine", "--step", "bus=0,mag=1",
                             "--param", "m", "--range", "0.5:10:20", "--metric", "nadir"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto rows = lines(result.out);
    ASSERT_EQ(rows.size(), 21u);
    EXPECT_EQ(rows[0], "m,nadir,method");
    double previous = 1e300;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double value = std::stod(split(rows[i], ',')[1]);
        EXPECT_LT(value, previous);
        previous = value;
    }
}

TEST(CliSweep, CostScalesWithInverseRootDamping) {
    const auto result = run({"sweep", "--grid", twobus(), "--model", "swing", "--step", "bus=0,mag=1",
                             "--param", "d", "--range", "0.5:8:6", "--metric", "sync_cost"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto rows = lines(result.out);
    ASSERT_EQ(rows.size(), 7u);
    const auto first = split(rows[1], ',');
    const double c0 = std::stod(first[1]) * std::sqrt(std::stod(first[0]));
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const auto cells = split(rows[i], ',');
        EXPECT_NEAR(std::stod(cells[1]) * std::sqrt(std::stod(cells[0])), c0, 1e-12 * c0);
    }
}

TEST(CliSweep, SteadyStateIgnoresInertia) {
    const auto result = run({"sweep", "--grid", twobus(), "--model", "turbine", "--step", "bus=0,mag=1",
                             "--param", "m", "--range", "0.5:10:5", "--metric", "w_inf"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto rows = lines(result.out);
    for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_EQ(split(rows[i], ',')[1], split(rows[1], ',')[1]);
}

TEST(CliSweep, TwoDimensionalAndErrors) {
    const auto result = run({"sweep", "--grid", twobus(), "--model", "turbine", "--param", "m", "--range",
                             "1:2:2", "--param", "tau", "--range", "1:3:3", "--metric", "mean_sync_cost"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto rows = lines(result.out);
    ASSERT_EQ(rows.size(), 7u);
    EXPECT_EQ(rows[0], "m,tau,mean_sync_cost,method");
    EXPECT_EQ(split(rows[2], ',')[0], "1");
    EXPECT_EQ(split(rows[2], ',')[1], "2");

    EXPECT_EQ(run({"sweep", "--grid", twobus(), "--model", "swing", "--param", "x", "--range", "1:2:2",
                   "--metric", "mean_sync_cost"}).code, 2);
    EXPECT_EQ(run({"sweep", "--grid", twobus(), "--model", "swing", "--param", "m", "--range", "1:2:2",
                   "--metric", "energy"}).code, 2);
    EXPECT_EQ(run({"sweep", "--grid", twobus(), "--model", "swing", "--param", "m", "--range", "1:2:2"}).code, 2);
}

TEST(CliConnectivity, SingleRowAndValidation) {
    const auto result = run({"connectivity", "--grid", twobus(), "--model", "swing", "--step", "bus=0,mag=1",
                             "--k-schedule", "0", "--seeds", "1"});
    ASSERT_EQ(result.code, 0) << result.err;
    const auto rows = lines(result.out);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "k,seed,lambda1,freq_gap,cost_true,cost_prop,rel_err");
    const auto cells = split(rows[1], ',');
    EXPECT_NEAR(std::stod(cells[5]), 0.35355, 1e-5);
    EXPECT_EQ(split(rows[2], ',')[1], "mean");

    EXPECT_EQ(run({"connectivity", "--grid", twobus(), "--model", "swing", "--step", "bus=0,mag=1",
                   "--seeds", "0"}).code, 2);
    EXPECT_EQ(run({"connectivity", "--grid", twobus(), "--model", "swing", "--step", "bus=0,mag=1",
                   "--k-schedule", "0,x"}).code, 2);
}

TEST(CliSelftest, AllPass) {
    const auto result = run({"selftest"});
    EXPECT_EQ(result.code, 0) << result.out;
    EXPECT_EQ(lines(result.out).size(), 6u);
    EXPECT_EQ(result.out.find("FAIL"), std::string::npos);
}
