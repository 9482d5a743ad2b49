#include "ferret_reference/lpd_reference.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace ferret::reference {

using lpd::CenterStrategy;
using lpd::NeighborhoodSpec;
using lpd::Statistic;

Image reconstruct(const Image& image, const NeighborhoodSpec& spec) {
    spec.validate();
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int n = spec.size, m = n / 2;
    Image out({c, h, w});

    std::vector<float> window;
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                window.clear();
                for (int ky = -m; ky <= m; ++ky) {
                    for (int kx = -m; kx <= m; ++kx) {
                        const bool is_center = ky == 0 && kx == 0;
                        float v = 0.0f;  // zero padding outside the image
                        int sy = y + ky, sx = x + kx;
                        if (sy >= 0 && sy < h && sx >= 0 && sx < w)
                            v = image.at(ch, sy, sx);
                        if (is_center) {
                            switch (spec.center) {
                                case CenterStrategy::Mask:
                                    if (spec.stat == Statistic::Max)
                                        v = -std::numeric_limits<float>::infinity();
                                    else if (spec.stat == Statistic::Min)
                                        v = std::numeric_limits<float>::infinity();
                                    else
                                        v = 0.0f;
                                    break;
                                case CenterStrategy::Exclusion:
                                    continue;
                                case CenterStrategy::Retention:
                                    break;
                            }
                        }
                        window.push_back(v);
                    }
                }
                const int count = static_cast<int>(window.size());
                float r = 0.0f;
                switch (spec.stat) {
                    case Statistic::Median: {
                        std::sort(window.begin(), window.end());
                        if (count % 2 == 1)
                            r = window[count / 2];
                        else
                            r = (window[count / 2 - 1] + window[count / 2]) * 0.5f;
                        break;
                    }
                    case Statistic::Max:
                        r = *std::max_element(window.begin(), window.end());
                        break;
                    case Statistic::Min:
                        r = *std::min_element(window.begin(), window.end());
                        break;
                    case Statistic::Avg: {
                        std::sort(window.begin(), window.end());
                        double s = 0.0;
                        for (float v : window) s += static_cast<double>(v);
                        // the masked center counts toward the divisor
                        int divisor = spec.center == CenterStrategy::Exclusion ? n * n - 1 : n * n;
                        r = static_cast<float>(s / divisor);
                        break;
                    }
                }
                out.at(ch, y, x) = r;
            }
        }
    }
    return out;
}

Image lpd_map(const Image& image, const NeighborhoodSpec& spec) {
    Image recon = reference::reconstruct(image, spec);
    Image out({image.dim(0), image.dim(1), image.dim(2)});
    for (std::size_t i = 0; i < image.numel(); ++i)
        out[i] = image[i] - recon[i];
    return out;
}

}  // namespace ferret::reference
