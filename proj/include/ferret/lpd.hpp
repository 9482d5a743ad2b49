#pragma once

#include <cstdint>
#include <string>

#include "ferret/tensor.hpp"

namespace ferret::lpd {

/// How the window's own center pixel is treated before the statistic.
enum class CenterStrategy { Mask, Exclusion, Retention };

/// Reduction applied to the neighborhood multiset.
enum class Statistic { Median, Max, Min, Avg };

/// Neighborhood configuration for local pixel dependency extraction.
/// Defaults are the best-performing setting: 3x3 window, zero-masked
/// center, median.
struct NeighborhoodSpec {
    int size = 3;
    CenterStrategy center = CenterStrategy::Mask;
    Statistic stat = Statistic::Median;

    void validate() const {
        require(size >= 3 && size % 2 == 1, "neighborhood size must be odd and >= 3");
    }
};

const char* to_string(CenterStrategy s);
const char* to_string(Statistic s);
CenterStrategy center_from_string(const std::string& s);
Statistic statistic_from_string(const std::string& s);

/// Constant zero padding of width p on both spatial axes.
Image zero_pad(const Image& image, int p);

/// Neighborhood reconstruction: every pixel is replaced by the configured
/// statistic of its n x n window, gathered from the zero-padded image.
///
/// Numeric conventions (shared with the serial reference so results agree
/// bit-for-bit):
///   - median of an odd multiset is the exact middle order statistic;
///   - median of an even multiset (Exclusion) is (a + b) * 0.5f of the two
///     middle order statistics, evaluated in float;
///   - Avg accumulates the window values in ascending order in double and
///     divides by n^2 (Mask: zeroed center stays in the count) or n^2 - 1
///     (Exclusion); ascending order makes the sum invariant under any
///     spatial permutation of the window;
///   - Max/Min under Mask treat the center as -inf/+inf, so it is never
///     selected.
Image reconstruct(const Image& image, const NeighborhoodSpec& spec);

/// Local pixel dependency map: image - reconstruct(image). In [-1,1] for
/// images in [0,1].
Image lpd_map(const Image& image, const NeighborhoodSpec& spec);

/// Visualization mapping [-1,1] -> [0,255], round half up.
std::uint8_t lpd_to_u8(float v);

}  // namespace ferret::lpd
