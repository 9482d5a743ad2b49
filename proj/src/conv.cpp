#include "ferret/conv.hpp"

namespace ferret::nn {

namespace {

template <typename T>
void transpose(int rows, int cols, const T* src, T* dst) {
    constexpr int B = 32;
    #pragma omp parallel for collapse(2) schedule(static)
    for (int i0 = 0; i0 < rows; i0 += B) {
        for (int j0 = 0; j0 < cols; j0 += B) {
            const int i1 = std::min(i0 + B, rows), j1 = std::min(j0 + B, cols);
            for (int i = i0; i < i1; ++i)
                for (int j = j0; j < j1; ++j)
                    dst[static_cast<std::size_t>(j) * rows + i] =
                        src[static_cast<std::size_t>(i) * cols + j];
        }
    }
}

template <typename T>
void add_bias(T* out, const T* bias, int channels, std::size_t plane) {
    #pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
        T* row = out + c * plane;
        const T b = bias[c];
        #pragma omp simd
        for (std::size_t i = 0; i < plane; ++i) row[i] += b;
    }
}

template <typename T>
void check_shapes(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>* bias,
                  const Conv2dSpec& s) {
    s.validate();
    require(input.ndim() == 4, "conv: input must be (N,C,H,W)");
    require(input.dim(1) == s.in_channels, "conv: input channels mismatch " +
            shape_str(input.shape));
    require(weight.shape == std::vector<int>({s.out_channels, s.in_channels / s.groups, s.kh, s.kw}),
            "conv: weight shape mismatch " + shape_str(weight.shape));
    if (bias)
        require(bias->shape == std::vector<int>({s.out_channels}), "conv: bias shape mismatch");
}

}  // namespace

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weight,
                          const TensorT<T>* bias, const Conv2dSpec& s) {
    check_shapes(input, weight, bias, s);
    const int n = input.dim(0), h = input.dim(2), w = input.dim(3);
    const int oh = s.out_dim(h, s.kh), ow = s.out_dim(w, s.kw);
    require(oh > 0 && ow > 0, "conv: spatial size too small for kernel");
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    TensorT<T> out({n, s.out_channels, oh, ow});

    if (s.depthwise()) {
        const int c = s.in_channels;
        #pragma omp parallel for collapse(2) schedule(static)
        for (int ni = 0; ni < n; ++ni) {
            for (int ci = 0; ci < c; ++ci) {
                const T* in_p = input.ptr() + (static_cast<std::size_t>(ni) * c + ci) * in_plane;
                T* out_p = out.ptr() + (static_cast<std::size_t>(ni) * c + ci) * out_plane;
                const T* wk = weight.ptr() + static_cast<std::size_t>(ci) * s.kh * s.kw;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        T acc = T(0);
                        for (int ky = 0; ky < s.kh; ++ky) {
                            const int iy = oy * s.stride + ky * s.dilation - s.padding;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < s.kw; ++kx) {
                                const int ix = ox * s.stride + kx * s.dilation - s.padding;
                                if (ix < 0 || ix >= w) continue;
                                acc += in_p[static_cast<std::size_t>(iy) * w + ix] * wk[ky * s.kw + kx];
                            }
                        }
                        out_p[static_cast<std::size_t>(oy) * ow + ox] = acc;
                    }
                }
            }
        }
    } else if (s.kh == 1 && s.kw == 1 && s.stride == 1 && s.padding == 0 && s.groups == 1) {
        // pointwise: plain GEMM over the channel dimension, no gather
        for (int ni = 0; ni < n; ++ni) {
            const T* in_n = input.ptr() + static_cast<std::size_t>(ni) * s.in_channels * in_plane;
            T* out_n = out.ptr() + static_cast<std::size_t>(ni) * s.out_channels * out_plane;
            gemm<T>(s.out_channels, static_cast<int>(out_plane), s.in_channels,
                    weight.ptr(), in_n, out_n, false);
        }
    } else {
        const int cg = s.in_channels / s.groups;
        const int og = s.out_channels / s.groups;
        const int k = cg * s.kh * s.kw;
        std::vector<T> col(static_cast<std::size_t>(k) * out_plane);
        for (int ni = 0; ni < n; ++ni) {
            for (int g = 0; g < s.groups; ++g) {
                const T* in_g = input.ptr() +
                    (static_cast<std::size_t>(ni) * s.in_channels + g * cg) * in_plane;
                im2col<T>(in_g, cg, h, w, s, oh, ow, col.data());
                T* out_g = out.ptr() +
                    (static_cast<std::size_t>(ni) * s.out_channels + g * og) * out_plane;
                gemm<T>(og, static_cast<int>(out_plane), k,
                        weight.ptr() + static_cast<std::size_t>(g) * og * k, col.data(), out_g, false);
            }
        }
    }

    if (bias) {
        for (int ni = 0; ni < n; ++ni)
            add_bias<T>(out.ptr() + static_cast<std::size_t>(ni) * s.out_channels * out_plane,
                        bias->ptr(), s.out_channels, out_plane);
    }
    return out;
}

template <typename T>
void conv2d_backward(const TensorT<T>& input, const TensorT<T>& weight, const Conv2dSpec& s,
                     const TensorT<T>& dout, TensorT<T>* dinput, TensorT<T>* dweight,
                     TensorT<T>* dbias) {
    check_shapes<T>(input, weight, static_cast<const TensorT<T>*>(nullptr), s);
    const int n = input.dim(0), h = input.dim(2), w = input.dim(3);
    const int oh = s.out_dim(h, s.kh), ow = s.out_dim(w, s.kw);
    require(dout.shape == std::vector<int>({n, s.out_channels, oh, ow}),
            "conv backward: dout shape mismatch");
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

    if (dbias) {
        #pragma omp parallel for schedule(static)
        for (int o = 0; o < s.out_channels; ++o) {
            T acc = T(0);
            for (int ni = 0; ni < n; ++ni) {
                const T* p = dout.ptr() + (static_cast<std::size_t>(ni) * s.out_channels + o) * out_plane;
                for (std::size_t i = 0; i < out_plane; ++i) acc += p[i];
            }
            (*dbias)[o] += acc;
        }
    }

    if (dinput) {
        require(dinput->shape == input.shape, "conv backward: dinput shape mismatch");
        dinput->zero();
    }

    if (s.depthwise()) {
        const int c = s.in_channels;
        if (dweight) {
            #pragma omp parallel for schedule(static)
            for (int ci = 0; ci < c; ++ci) {
                T* dwk = dweight->ptr() + static_cast<std::size_t>(ci) * s.kh * s.kw;
                for (int ni = 0; ni < n; ++ni) {
                    const T* in_p = input.ptr() + (static_cast<std::size_t>(ni) * c + ci) * in_plane;
                    const T* do_p = dout.ptr() + (static_cast<std::size_t>(ni) * c + ci) * out_plane;
                    for (int ky = 0; ky < s.kh; ++ky) {
                        for (int kx = 0; kx < s.kw; ++kx) {
                            T acc = T(0);
                            for (int oy = 0; oy < oh; ++oy) {
                                const int iy = oy * s.stride + ky * s.dilation - s.padding;
                                if (iy < 0 || iy >= h) continue;
                                for (int ox = 0; ox < ow; ++ox) {
                                    const int ix = ox * s.stride + kx * s.dilation - s.padding;
                                    if (ix < 0 || ix >= w) continue;
                                    acc += in_p[static_cast<std::size_t>(iy) * w + ix] *
                                           do_p[static_cast<std::size_t>(oy) * ow + ox];
                                }
                            }
                            dwk[ky * s.kw + kx] += acc;
                        }
                    }
                }
            }
        }
        if (dinput) {
            #pragma omp parallel for collapse(2) schedule(static)
            for (int ni = 0; ni < n; ++ni) {
                for (int ci = 0; ci < c; ++ci) {
                    T* di_p = dinput->ptr() + (static_cast<std::size_t>(ni) * c + ci) * in_plane;
                    const T* do_p = dout.ptr() + (static_cast<std::size_t>(ni) * c + ci) * out_plane;
                    const T* wk = weight.ptr() + static_cast<std::size_t>(ci) * s.kh * s.kw;
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            const T g = do_p[static_cast<std::size_t>(oy) * ow + ox];
                            for (int ky = 0; ky < s.kh; ++ky) {
                                const int iy = oy * s.stride + ky * s.dilation - s.padding;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < s.kw; ++kx) {
                                    const int ix = ox * s.stride + kx * s.dilation - s.padding;
                                    if (ix < 0 || ix >= w) continue;
                                    di_p[static_cast<std::size_t>(iy) * w + ix] += g * wk[ky * s.kw + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
        return;
    }

    const bool pointwise = s.kh == 1 && s.kw == 1 && s.stride == 1 && s.padding == 0 && s.groups == 1;
    if (pointwise) {
        std::vector<T> in_t(static_cast<std::size_t>(s.in_channels) * out_plane);
        std::vector<T> w_t;
        if (dinput) {
            w_t.resize(weight.numel());
            transpose<T>(s.out_channels, s.in_channels, weight.ptr(), w_t.data());
        }
        for (int ni = 0; ni < n; ++ni) {
            const T* do_n = dout.ptr() + static_cast<std::size_t>(ni) * s.out_channels * out_plane;
            if (dweight) {
                const T* in_n = input.ptr() + static_cast<std::size_t>(ni) * s.in_channels * in_plane;
                transpose<T>(s.in_channels, static_cast<int>(out_plane), in_n, in_t.data());
                gemm<T>(s.out_channels, s.in_channels, static_cast<int>(out_plane),
                        do_n, in_t.data(), dweight->ptr(), true);
            }
            if (dinput) {
                T* di_n = dinput->ptr() + static_cast<std::size_t>(ni) * s.in_channels * in_plane;
                gemm<T>(s.in_channels, static_cast<int>(out_plane), s.out_channels,
                        w_t.data(), do_n, di_n, false);
            }
        }
        return;
    }

    // general grouped path: per sample, rebuild the column matrix
    const int cg = s.in_channels / s.groups;
    const int og = s.out_channels / s.groups;
    const int k = cg * s.kh * s.kw;
    std::vector<T> col(static_cast<std::size_t>(k) * out_plane);
    std::vector<T> col_t(static_cast<std::size_t>(k) * out_plane);
    std::vector<T> w_t;
    if (dinput) w_t.resize(static_cast<std::size_t>(k) * og);
    for (int ni = 0; ni < n; ++ni) {
        for (int g = 0; g < s.groups; ++g) {
            const T* do_g = dout.ptr() +
                (static_cast<std::size_t>(ni) * s.out_channels + g * og) * out_plane;
            const T* wg = weight.ptr() + static_cast<std::size_t>(g) * og * k;
            if (dweight) {
                const T* in_g = input.ptr() +
                    (static_cast<std::size_t>(ni) * s.in_channels + g * cg) * in_plane;
                im2col<T>(in_g, cg, h, w, s, oh, ow, col.data());
                transpose<T>(k, static_cast<int>(out_plane), col.data(), col_t.data());
                gemm<T>(og, k, static_cast<int>(out_plane), do_g, col_t.data(),
                        dweight->ptr() + static_cast<std::size_t>(g) * og * k, true);
            }
            if (dinput) {
                transpose<T>(og, k, wg, w_t.data());
                gemm<T>(k, static_cast<int>(out_plane), og, w_t.data(), do_g, col.data(), false);
                T* di_g = dinput->ptr() +
                    (static_cast<std::size_t>(ni) * s.in_channels + g * cg) * in_plane;
                col2im<T>(col.data(), cg, h, w, s, oh, ow, di_g);
            }
        }
    }
}

template TensorT<float> conv2d_forward<float>(const TensorT<float>&, const TensorT<float>&,
                                              const TensorT<float>*, const Conv2dSpec&);
template TensorT<double> conv2d_forward<double>(const TensorT<double>&, const TensorT<double>&,
                                                const TensorT<double>*, const Conv2dSpec&);
template void conv2d_backward<float>(const TensorT<float>&, const TensorT<float>&, const Conv2dSpec&,
                                     const TensorT<float>&, TensorT<float>*, TensorT<float>*,
                                     TensorT<float>*);
template void conv2d_backward<double>(const TensorT<double>&, const TensorT<double>&, const Conv2dSpec&,
                                      const TensorT<double>&, TensorT<double>*, TensorT<double>*,
                                      TensorT<double>*);

}  // namespace ferret::nn
