#include "ferret/lpd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ferret::lpd {

const char* to_string(CenterStrategy s) {
    switch (s) {
        case CenterStrategy::Mask: return "mask";
        case CenterStrategy::Exclusion: return "exclude";
        case CenterStrategy::Retention: return "retain";
    }
    return "?";
}

const char* to_string(Statistic s) {
    switch (s) {
        case Statistic::Median: return "median";
        case Statistic::Max: return "max";
        case Statistic::Min: return "min";
        case Statistic::Avg: return "avg";
    }
    return "?";
}

CenterStrategy center_from_string(const std::string& s) {
    if (s == "mask") return CenterStrategy::Mask;
    if (s == "exclude") return CenterStrategy::Exclusion;
    if (s == "retain") return CenterStrategy::Retention;
    throw std::invalid_argument("unknown center strategy: " + s);
}

Statistic statistic_from_string(const std::string& s) {
    if (s == "median") return Statistic::Median;
    if (s == "max") return Statistic::Max;
    if (s == "min") return Statistic::Min;
    if (s == "avg") return Statistic::Avg;
    throw std::invalid_argument("unknown statistic: " + s);
}

Image zero_pad(const Image& image, int p) {
    require(image.ndim() == 3, "zero_pad expects a (C,H,W) tensor");
    require(p >= 0, "padding must be non-negative");
    if (p == 0) return image;
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Image out({c, h + 2 * p, w + 2 * p}, 0.0f);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            std::copy_n(&image.at(ch, y, 0), w, &out.at(ch, y + p, p));
    return out;
}

namespace {

inline void minmax(float& a, float& b) {
    float lo = std::min(a, b), hi = std::max(a, b);
    a = lo;
    b = hi;
}

// Exact median of 9 via a 19-exchange sorting network.
inline float median9(float v[9]) {
    minmax(v[1], v[2]); minmax(v[4], v[5]); minmax(v[7], v[8]);
    minmax(v[0], v[1]); minmax(v[3], v[4]); minmax(v[6], v[7]);
    minmax(v[1], v[2]); minmax(v[4], v[5]); minmax(v[7], v[8]);
    minmax(v[0], v[3]); minmax(v[5], v[8]); minmax(v[4], v[7]);
    minmax(v[3], v[6]); minmax(v[1], v[4]); minmax(v[2], v[5]);
    minmax(v[4], v[7]); minmax(v[4], v[2]); minmax(v[6], v[4]);
    minmax(v[4], v[2]);
    return v[4];
}

// Statistic of one gathered window. `w` holds the n*n values in row-major
// window order with the center at index n*n/2; modified in place.
inline float window_stat(float* w, int n2, const NeighborhoodSpec& spec) {
    const int center = n2 / 2;
    int count = n2;
    switch (spec.stat) {
        case Statistic::Median: {
            if (spec.center == CenterStrategy::Mask) {
                w[center] = 0.0f;
            } else if (spec.center == CenterStrategy::Exclusion) {
                w[center] = w[n2 - 1];
                count = n2 - 1;
            }
            std::sort(w, w + count);
            if (count % 2 == 1) return w[count / 2];
            return (w[count / 2 - 1] + w[count / 2]) * 0.5f;
        }
        case Statistic::Max: {
            float m = -std::numeric_limits<float>::infinity();
            for (int i = 0; i < n2; ++i) {
                if (i == center && spec.center != CenterStrategy::Retention) continue;
                m = std::max(m, w[i]);
            }
            return m;
        }
        case Statistic::Min: {
            float m = std::numeric_limits<float>::infinity();
            for (int i = 0; i < n2; ++i) {
                if (i == center && spec.center != CenterStrategy::Retention) continue;
                m = std::min(m, w[i]);
            }
            return m;
        }
        case Statistic::Avg: {
            if (spec.center == CenterStrategy::Mask) {
                w[center] = 0.0f;
            } else if (spec.center == CenterStrategy::Exclusion) {
                w[center] = w[n2 - 1];
                count = n2 - 1;
            }
            // ascending-order sum: permutation-invariant rounding
            std::sort(w, w + count);
            double s = 0.0;
            for (int i = 0; i < count; ++i) s += static_cast<double>(w[i]);
            int divisor = (spec.center == CenterStrategy::Exclusion) ? n2 - 1 : n2;
            return static_cast<float>(s / divisor);
        }
    }
    return 0.0f;
}

}  // namespace

Image reconstruct(const Image& image, const NeighborhoodSpec& spec) {
    spec.validate();
    require(image.ndim() == 3, "reconstruct expects a (C,H,W) tensor");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int n = spec.size, m = n / 2, n2 = n * n;
    const Image padded = zero_pad(image, m);
    const int pw = w + 2 * m;
    Image out({c, h, w});

    const bool fast_median9 = n == 3 && spec.center == CenterStrategy::Mask &&
                              spec.stat == Statistic::Median;

    #pragma omp parallel for collapse(2) schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y) {
            const float* base = padded.ptr() + (static_cast<std::size_t>(ch) * (h + 2 * m) + y) * pw;
            float* dst = &out.at(ch, y, 0);
            if (fast_median9) {
                for (int x = 0; x < w; ++x) {
                    const float* r0 = base + x;
                    const float* r1 = r0 + pw;
                    const float* r2 = r1 + pw;
                    float win[9] = {r0[0], r0[1], r0[2], r1[0], 0.0f, r1[2], r2[0], r2[1], r2[2]};
                    dst[x] = median9(win);
                }
            } else {
                std::vector<float> win(static_cast<std::size_t>(n2));
                for (int x = 0; x < w; ++x) {
                    float* dw = win.data();
                    for (int ky = 0; ky < n; ++ky) {
                        const float* row = base + static_cast<std::size_t>(ky) * pw + x;
                        for (int kx = 0; kx < n; ++kx) *dw++ = row[kx];
                    }
                    dst[x] = window_stat(win.data(), n2, spec);
                }
            }
        }
    }
    return out;
}

Image lpd_map(const Image& image, const NeighborhoodSpec& spec) {
    Image recon = reconstruct(image, spec);
    Image out({image.dim(0), image.dim(1), image.dim(2)});
    const std::size_t n = image.numel();
    const float* a = image.ptr();
    const float* b = recon.ptr();
    float* o = out.ptr();
    #pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        o[i] = a[i] - b[i];
    return out;
}

std::uint8_t lpd_to_u8(float v) {
    double mapped = (static_cast<double>(v) + 1.0) * 0.5 * 255.0;
    double rounded = std::floor(mapped + 0.5);  // round half up
    if (rounded < 0.0) rounded = 0.0;
    if (rounded > 255.0) rounded = 255.0;
    return static_cast<std::uint8_t>(rounded);
}

}  // namespace ferret::lpd
