#pragma once

#include "floweval/types.hpp"

#include <string>
#include <vector>

namespace floweval::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Built-in analytic oracle suite: score anchors, exact-EDT cross-check,
/// stencil convergence and the residual integral. `filter` keeps only checks
/// whose name contains the substring.
std::vector<CheckResult> run_checks(const std::string& filter = "");

/// Deterministic smooth random blob (thresholded sum of Gaussians); both
/// phases guaranteed.
GeometryMask random_blob_mask(const Grid& grid, std::uint64_t seed);

/// O(N^2) all-pairs signed EDT with the same h/2 calibration; reference
/// implementation, independent of the production transform.
SignedDistanceField brute_force_sdf(const GeometryMask& mask,
                                    bool interface_calibration = true);

} // namespace floweval::verify
