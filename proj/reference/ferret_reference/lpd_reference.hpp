#pragma once

#include "ferret/lpd.hpp"
#include "ferret/tensor.hpp"

// Serial, deliberately naive counterparts of the production kernels.
// Used as oracles by the test suites and as baselines by kernel_bench;
// never linked into the main library.
namespace ferret::reference {

/// Per-pixel window gather with explicit bounds checks (implicit zero
/// padding), full sort, direct order-statistic selection.
Image reconstruct(const Image& image, const lpd::NeighborhoodSpec& spec);

Image lpd_map(const Image& image, const lpd::NeighborhoodSpec& spec);

}  // namespace ferret::reference
