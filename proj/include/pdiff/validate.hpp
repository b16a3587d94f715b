#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdiff {

enum class ValidationLevel { Fast, Full };

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Runs the identity suite: loss-function properties, sampler goodness of
/// fit, conjugate-prior agreements, information identities, tail-bound
/// dominance, and denoiser gradient checks.  Fast keeps Monte Carlo sizes
/// small enough for a sub-minute run; Full raises them to 1e6.
std::vector<CheckResult> run_validation(ValidationLevel level, std::uint64_t seed = 20260808);

}  // namespace pdiff
