#pragma once

// Deterministic property checks bundled with the command-line tool.

#include <cstdint>
#include <string>
#include <vector>

namespace epiou {

struct SelftestCase {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelftestCase> cases;
    double seconds = 0.0;

    bool all_passed() const;
};

/// Conjugacy closure, parameter-map bijections, weight normalization and
/// translation invariance on randomly drawn inputs.
SelftestReport run_selftest(std::uint64_t seed);

}  // namespace epiou
