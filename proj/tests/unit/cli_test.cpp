#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "pointscat/cli.hpp"
#include "pointscat/error.hpp"

using namespace pointscat;
namespace fs = std::filesystem;

namespace {

int run_args(std::vector<std::string> args) {
    args.insert(args.begin(), "pointscat");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("pointscat_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

const char* kTinyConfig = R"({
  "potential": {"kind": "radial_bump", "amplitude": 1.0, "width": 0.5, "margin_h": 0.3},
  "forward": {"grid": {"radial": 12, "time": 24, "polar": 8, "azimuth": 16, "kernel_panels": 6}},
  "sources": {"polar": 1, "azimuth": 2},
  "n_tau": 24,
  "inverse": {"shells": 4, "margin_h": 0.3}
})";

}  // namespace

TEST(RunConfig, DefaultsAndInheritance) {
    const auto c = cli::RunConfig::from_json(kTinyConfig);
    ASSERT_TRUE(c.potential.has_value());
    EXPECT_EQ(c.potential->width, 0.5);
    EXPECT_EQ(c.forward.grid.radial, 12);
    EXPECT_EQ(c.forward.quadrature.polar, 8);
    EXPECT_EQ(c.inverse.forward.grid.radial, 12);  // inverse inherits the forward grid
    EXPECT_EQ(c.inverse.shells, 4);
    EXPECT_EQ(c.seed, 1u);
    const auto back = cli::RunConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(RunConfig, InvalidValuesAreConfigErrors) {
    EXPECT_THROW(cli::RunConfig::from_json(R"({"threads": 0})"), ConfigError);
    EXPECT_THROW(cli::RunConfig::from_json(R"({"sources": {"azimuth": 3}})"), ConfigError);
    EXPECT_THROW(cli::RunConfig::from_json(R"({"stability": {"noise": [-1]}})"), ConfigError);
    EXPECT_THROW(cli::RunConfig::from_json(R"({"potential": {"width": 0.95}})"), ConfigError);
    EXPECT_THROW(cli::RunConfig::from_json("[1,"), ConfigError);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_args({"verify", "--suite", "gamma"}), cli::kOk);
    EXPECT_EQ(run_args({"verify", "--suite", "kernel", "--mutate-lorentz-sign"}), cli::kVerifyFailed);
    EXPECT_EQ(run_args({"verify", "--suite", "nope"}), cli::kConfigError);
    EXPECT_EQ(run_args({}), cli::kConfigError);
    EXPECT_EQ(run_args({"forward", "--config", "/nonexistent/config.json"}), cli::kConfigError);
    EXPECT_EQ(run_args({"forward"}), cli::kConfigError);  // no potential
    EXPECT_EQ(run_args({"invert", "--data", "/nonexistent.csv"}), cli::kConfigError);
}

TEST(Cli, ForwardThenInvertWritesArtifacts) {
    const fs::path dir = scratch_dir("roundtrip");
    {
        std::ofstream(dir / "config.json") << kTinyConfig;
    }
    const std::string cfg = (dir / "config.json").string();
    ASSERT_EQ(run_args({"forward", "--config", cfg, "--out", dir.string()}), cli::kOk);
    ASSERT_TRUE(fs::exists(dir / "backscatter.csv"));
    const auto side = nlohmann::json::parse(slurp(dir / "backscatter.json"));
    EXPECT_EQ(side.at("sources").at("n_azimuth"), 2);

    const fs::path inv = dir / "inv";
    ASSERT_EQ(run_args({"invert", "--config", cfg, "--data", (dir / "backscatter.csv").string(), "--out", inv.string()}),
              cli::kOk);
    const auto rec = nlohmann::json::parse(slurp(inv / "reconstruction.json"));
    EXPECT_EQ(rec.at("shell_errors").size(), 4u);
    EXPECT_TRUE(rec.contains("relative_l2_r_ge_half"));
    EXPECT_TRUE(fs::exists(inv / "reconstruction.csv"));
    fs::remove_all(dir);
}
