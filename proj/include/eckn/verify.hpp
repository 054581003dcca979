#pragma once

#include <string>
#include <vector>

#include "eckn/data.hpp"

namespace eckn {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Runs the module invariant suites at desk scale against the configured
// group/network: group axioms, kernel constraint certification, Nystrom
// consistency, pooling norm and cross-correlation agreement, lattice
// equivariance, telescoping bounds and a determinism spot check.
std::vector<CheckResult> run_verification_suite(const RunConfig& cfg);

} // namespace eckn
