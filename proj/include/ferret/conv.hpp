#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ferret/tensor.hpp"

namespace ferret::nn {

/// Convolution geometry. Cross-correlation semantics, zero padding,
/// grouped channels partitioned contiguously.
struct Conv2dSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kh = 1, kw = 1;
    int stride = 1;
    int padding = 0;
    int dilation = 1;
    int groups = 1;

    void validate() const {
        require(in_channels > 0 && out_channels > 0, "conv: channels must be positive");
        require(kh > 0 && kw > 0, "conv: kernel dims must be positive");
        require(stride > 0 && dilation > 0 && groups > 0, "conv: stride/dilation/groups must be positive");
        require(padding >= 0, "conv: padding must be non-negative");
        require(in_channels % groups == 0 && out_channels % groups == 0,
                "conv: groups must divide both channel counts");
    }

    bool depthwise() const {
        return groups == in_channels && groups == out_channels;
    }

    int out_dim(int in, int k) const {
        return (in + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
    }
};

/// C[M x N] (+)= A[M x K] * B[K x N], row-major. Each output element
/// accumulates over k in strictly ascending order, so results are
/// independent of the thread count and zero-valued terms drop out
/// without perturbing rounding.
template <typename T>
void gemm(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
    #pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::fill(crow, crow + n, T(0));
        for (int kk = 0; kk < k; ++kk) {
            const T av = a[static_cast<std::size_t>(i) * k + kk];
            const T* brow = b + static_cast<std::size_t>(kk) * n;
            #pragma omp simd
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

/// Patch gathering for one sample and one channel group.
/// Output layout: (channels * kh * kw) x (out_h * out_w), row-major;
/// rows ordered (channel, ky, kx).
template <typename T>
void im2col(const T* input, int channels, int h, int w, const Conv2dSpec& s,
            int out_h, int out_w, T* col) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::size_t row = 0;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < s.kh; ++ky) {
            for (int kx = 0; kx < s.kw; ++kx, ++row) {
                T* dst = col + row * out_h * out_w;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * s.stride + ky * s.dilation - s.padding;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst, dst + out_w, T(0));
                        dst += out_w;
                        continue;
                    }
                    const T* src = input + c * plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * s.stride + kx * s.dilation - s.padding;
                        *dst++ = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

/// Scatter-add inverse of im2col.
template <typename T>
void col2im(const T* col, int channels, int h, int w, const Conv2dSpec& s,
            int out_h, int out_w, T* input) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::size_t row = 0;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < s.kh; ++ky) {
            for (int kx = 0; kx < s.kw; ++kx, ++row) {
                const T* src = col + row * out_h * out_w;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * s.stride + ky * s.dilation - s.padding;
                    if (iy < 0 || iy >= h) {
                        src += out_w;
                        continue;
                    }
                    T* dst = input + c * plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < out_w; ++ox, ++src) {
                        const int ix = ox * s.stride + kx * s.dilation - s.padding;
                        if (ix >= 0 && ix < w) dst[ix] += *src;
                    }
                }
            }
        }
    }
}

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weight,
                          const TensorT<T>* bias, const Conv2dSpec& spec);

/// Gradients of conv2d. Any of the output gradient tensors may be null.
/// dweight/dbias are accumulated into (callers zero them per step).
template <typename T>
void conv2d_backward(const TensorT<T>& input, const TensorT<T>& weight, const Conv2dSpec& spec,
                     const TensorT<T>& dout, TensorT<T>* dinput, TensorT<T>* dweight,
                     TensorT<T>* dbias);

}  // namespace ferret::nn
