#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pointscat/stability.hpp"

namespace pointscat::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3, kVerifyFailed = 4 };

struct RunConfig {
    std::optional<PotentialSpec> potential;  // required by forward and stability; enables error columns in invert
    PointSourceOptions forward;
    int source_polar = 2;
    int source_azimuth = 4;
    int n_tau = 96;
    InverseConfig inverse;
    std::vector<double> noise{1e-4, 1e-3, 1e-2};
    int noise_degree = 3;
    std::string data;  // backscatter CSV read by invert
    std::string out = "out";
    std::uint64_t seed = 1;
    int threads = 1;

    // Throws ConfigError.
    static RunConfig from_json(const std::string& text);
    std::string to_json() const;
    StabilityConfig stability() const;
};

RunConfig load_config(const std::string& path);

// Each command writes into config.out and returns an exit code.
int cmd_forward(const RunConfig& config);
int cmd_invert(const RunConfig& config);
int cmd_verify(const std::string& suite, std::uint64_t seed, bool mutate_lorentz_sign);
int cmd_stability(const RunConfig& config);

// Full command line: subcommands forward | invert | verify | stability.
int run(int argc, char** argv);

}  // namespace pointscat::cli
