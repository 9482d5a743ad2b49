#pragma once

#include "ferret/rng.hpp"
#include "ferret/tensor.hpp"

namespace ferret::test {

inline Image random_image(Rng& rng, int c, int h, int w) {
    Image img({c, h, w});
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

inline Image hflip(const Image& in) {
    Image out({in.dim(0), in.dim(1), in.dim(2)});
    for (int c = 0; c < in.dim(0); ++c)
        for (int y = 0; y < in.dim(1); ++y)
            for (int x = 0; x < in.dim(2); ++x)
                out.at(c, y, x) = in.at(c, y, in.dim(2) - 1 - x);
    return out;
}

inline Image vflip(const Image& in) {
    Image out({in.dim(0), in.dim(1), in.dim(2)});
    for (int c = 0; c < in.dim(0); ++c)
        for (int y = 0; y < in.dim(1); ++y)
            for (int x = 0; x < in.dim(2); ++x)
                out.at(c, y, x) = in.at(c, in.dim(1) - 1 - y, x);
    return out;
}

// 90 degrees counter-clockwise
inline Image rot90(const Image& in) {
    Image out({in.dim(0), in.dim(2), in.dim(1)});
    for (int c = 0; c < in.dim(0); ++c)
        for (int y = 0; y < in.dim(1); ++y)
            for (int x = 0; x < in.dim(2); ++x)
                out.at(c, in.dim(2) - 1 - x, y) = in.at(c, y, x);
    return out;
}

inline bool bitwise_equal(const Image& a, const Image& b) {
    if (a.shape != b.shape) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

inline float max_abs_diff(const Image& a, const Image& b) {
    float m = 0.0f;
    for (std::size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace ferret::test
