#pragma once

#include "ferret/conv.hpp"
#include "ferret/tensor.hpp"

namespace ferret::reference {

/// Direct-definition convolution: quadruple loop over output coordinates,
/// explicit bounds checks. Serial.
template <typename T>
TensorT<T> conv2d_naive(const TensorT<T>& input, const TensorT<T>& weight,
                        const TensorT<T>* bias, const nn::Conv2dSpec& s) {
    s.validate();
    const int n = input.dim(0), h = input.dim(2), w = input.dim(3);
    const int oh = s.out_dim(h, s.kh), ow = s.out_dim(w, s.kw);
    const int cg = s.in_channels / s.groups;
    const int og = s.out_channels / s.groups;
    TensorT<T> out({n, s.out_channels, oh, ow});
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < s.out_channels; ++oc) {
            const int g = oc / og;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    T acc = T(0);
                    for (int ic = 0; ic < cg; ++ic) {
                        for (int ky = 0; ky < s.kh; ++ky) {
                            for (int kx = 0; kx < s.kw; ++kx) {
                                const int iy = oy * s.stride + ky * s.dilation - s.padding;
                                const int ix = ox * s.stride + kx * s.dilation - s.padding;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += input.at(ni, g * cg + ic, iy, ix) *
                                       weight.data[((static_cast<std::size_t>(oc) * cg + ic) * s.kh + ky) * s.kw + kx];
                            }
                        }
                    }
                    if (bias) acc += (*bias)[oc];
                    out.at(ni, oc, oy, ox) = acc;
                }
            }
        }
    }
    return out;
}

}  // namespace ferret::reference
