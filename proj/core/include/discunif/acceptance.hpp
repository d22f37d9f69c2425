#pragma once

// The acceptance suite: eleven property checks over the whole toolkit.
// Resolutions and tolerances follow a base ring count; the full suite runs at
// 32 rings (and 64 where a criterion asks for the finer mesh). Smaller bases
// rescale the mesh-dependent tolerances by the observed convergence order.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace discunif
{

struct AcceptanceOptions
{
    /// Coarse ring count; the fine mesh uses twice as many. Full suite: 32.
    int base_rings = 32;
    std::uint64_t seed = 20240611;
};

struct CriterionResult
{
    int id = 0;
    std::string name;
    bool passed = false;
    /// One line of measured values against their limits.
    std::string detail;
    double seconds = 0.0;
};

inline constexpr int kCriterionCount = 11;

/// Runs criterion id (1-based). Exceptions from the library are caught and
/// reported as failures.
CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {});

/// Runs every criterion in order, reporting each result as it completes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS  3 identity rigidity: ..." style line.
std::string format_result(const CriterionResult& r);

}  // namespace discunif
