#pragma once

#include <string>
#include <vector>

namespace pointscat::suites {

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;      // measured quantity
    double tolerance = 0.0;  // threshold it was compared against
};

struct SuiteOptions {
    // Flip the sign of the cross term in the Lorentz form (the kernel suite must then fail).
    bool mutate_lorentz_sign = false;
    unsigned long long seed = 1;
};

const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);

// Throws std::invalid_argument for an unknown suite.
std::vector<Check> run_suite(const std::string& name, const SuiteOptions& options = {});

// One JSON object per failed check, one per line.
std::string failures_jsonl(const std::string& suite, const std::vector<Check>& checks);

}  // namespace pointscat::suites
