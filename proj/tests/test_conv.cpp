#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ferret/conv.hpp"
#include "ferret/rng.hpp"
#include "ferret_reference/conv_reference.hpp"

using namespace ferret;
using nn::Conv2dSpec;

namespace {

template <typename T>
TensorT<T> random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    TensorT<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// spread a 3x3 dilation-2 kernel onto a 5x5 grid with zeros in between
template <typename T>
TensorT<T> sparse5x5_from_dilated3x3(const TensorT<T>& w3) {
    TensorT<T> w5({w3.dim(0), w3.dim(1), 5, 5}, T(0));
    for (int o = 0; o < w3.dim(0); ++o)
        for (int i = 0; i < w3.dim(1); ++i)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    w5.data[((static_cast<std::size_t>(o) * w3.dim(1) + i) * 5 + 2 * ky) * 5 + 2 * kx] =
                        w3.data[((static_cast<std::size_t>(o) * w3.dim(1) + i) * 3 + ky) * 3 + kx];
    return w5;
}

}  // namespace

TEST_CASE("1x1 identity kernel reproduces the input") {
    Rng rng(1);
    auto x = random_tensor<float>(rng, {2, 1, 5, 7}, 0.0, 1.0);
    Tensor w({1, 1, 1, 1});
    w[0] = 1.0f;
    Conv2dSpec s{1, 1, 1, 1, 1, 0, 1, 1};
    auto y = nn::conv2d_forward<float>(x, w, nullptr, s);
    REQUIRE(y.shape == x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("zero depthwise kernel annihilates any input") {
    Rng rng(2);
    auto x = random_tensor<float>(rng, {1, 4, 6, 6});
    Tensor w({4, 1, 3, 3}, 0.0f);
    Conv2dSpec s{4, 4, 3, 3, 1, 1, 1, 4};
    auto y = nn::conv2d_forward<float>(x, w, nullptr, s);
    for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 0.0f);
}

TEST_CASE("ramp input with a 3x3 ones kernel sums in-bounds neighbors") {
    Tensor x({1, 1, 4, 4});
    for (int i = 0; i < 16; ++i) x[i] = static_cast<float>(i) / 15.0f;
    Tensor w({1, 1, 3, 3}, 1.0f);
    Conv2dSpec s{1, 1, 3, 3, 1, 1, 1, 1};
    auto y = nn::conv2d_forward<float>(x, w, nullptr, s);
    auto want = reference::conv2d_naive<float>(x, w, nullptr, s);
    REQUIRE(y.shape == want.shape);
    for (std::size_t i = 0; i < y.numel(); ++i)
        CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-6));
    // spot check one interior element by hand: neighbors of (1,1)
    float sum = 0.0f;
    for (int dy = 0; dy <= 2; ++dy)
        for (int dx = 0; dx <= 2; ++dx) sum += x.at(0, dy, dx);
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(sum));
}

TEST_CASE("random convolutions match the direct-definition oracle") {
    Rng rng(3);
    struct Case { int cin, cout, k, stride, pad, dil, groups; };
    const Case cases[] = {
        {3, 8, 3, 1, 1, 1, 1},  {4, 4, 3, 1, 2, 2, 4},  {6, 9, 3, 2, 1, 1, 3},
        {8, 8, 1, 1, 0, 1, 1},  {2, 2, 5, 1, 2, 1, 2},  {3, 6, 3, 2, 0, 1, 3},
        {4, 8, 1, 2, 0, 1, 2},  {5, 5, 7, 1, 3, 1, 5},
    };
    for (const auto& c : cases) {
        Conv2dSpec s{c.cin, c.cout, c.k, c.k, c.stride, c.pad, c.dil, c.groups};
        auto x = random_tensor<float>(rng, {2, c.cin, 11, 9});
        auto w = random_tensor<float>(rng, {c.cout, c.cin / c.groups, c.k, c.k});
        auto b = random_tensor<float>(rng, {c.cout});
        auto got = nn::conv2d_forward<float>(x, w, &b, s);
        auto want = reference::conv2d_naive<float>(x, w, &b, s);
        REQUIRE(got.shape == want.shape);
        float maxd = 0.0f;
        for (std::size_t i = 0; i < got.numel(); ++i)
            maxd = std::max(maxd, std::abs(got[i] - want[i]));
        CHECK(maxd <= 1e-5f);
    }
}

TEST_CASE("conv2d is linear in input and weights (double precision)") {
    Rng rng(4);
    Conv2dSpec s{3, 6, 3, 3, 1, 1, 1, 1};
    auto x = random_tensor<double>(rng, {1, 3, 8, 8});
    auto y = random_tensor<double>(rng, {1, 3, 8, 8});
    auto w = random_tensor<double>(rng, {6, 3, 3, 3});
    const double a = 0.37, b = -1.21;

    TensorT<double> axby({1, 3, 8, 8});
    for (std::size_t i = 0; i < axby.numel(); ++i) axby[i] = a * x[i] + b * y[i];
    auto lhs = nn::conv2d_forward<double>(axby, w, nullptr, s);
    auto fx = nn::conv2d_forward<double>(x, w, nullptr, s);
    auto fy = nn::conv2d_forward<double>(y, w, nullptr, s);
    for (std::size_t i = 0; i < lhs.numel(); ++i)
        CHECK(std::abs(lhs[i] - (a * fx[i] + b * fy[i])) <= 1e-10);

    // linearity in weights
    auto w2 = random_tensor<double>(rng, {6, 3, 3, 3});
    TensorT<double> wc({6, 3, 3, 3});
    for (std::size_t i = 0; i < wc.numel(); ++i) wc[i] = a * w[i] + b * w2[i];
    auto lhs2 = nn::conv2d_forward<double>(x, wc, nullptr, s);
    auto g1 = nn::conv2d_forward<double>(x, w, nullptr, s);
    auto g2 = nn::conv2d_forward<double>(x, w2, nullptr, s);
    for (std::size_t i = 0; i < lhs2.numel(); ++i)
        CHECK(std::abs(lhs2[i] - (a * g1[i] + b * g2[i])) <= 1e-10);
}

TEST_CASE("grouped conv with groups=C equals per-channel convolutions") {
    Rng rng(5);
    const int c = 5;
    Conv2dSpec s{c, c, 3, 3, 1, 1, 1, c};
    auto x = random_tensor<float>(rng, {1, c, 9, 9});
    auto w = random_tensor<float>(rng, {c, 1, 3, 3});
    auto full = nn::conv2d_forward<float>(x, w, nullptr, s);

    for (int ci = 0; ci < c; ++ci) {
        Tensor xs({1, 1, 9, 9});
        std::copy_n(&x.at(0, ci, 0, 0), 81, xs.ptr());
        Tensor ws({1, 1, 3, 3});
        std::copy_n(w.ptr() + ci * 9, 9, ws.ptr());
        Conv2dSpec s1{1, 1, 3, 3, 1, 1, 1, 1};
        auto ys = nn::conv2d_forward<float>(xs, ws, nullptr, s1);
        const float* full_ch = &full.at(0, ci, 0, 0);
        for (int i = 0; i < 81; ++i) CHECK(ys[i] == full_ch[i]);
    }
}

TEST_CASE("dilated 3x3 equals sparse 5x5, bit for bit") {
    Rng rng(6);
    for (int iter = 0; iter < 20; ++iter) {
        const bool depthwise = rng.bernoulli(0.5);
        const int groups = depthwise ? 4 : 1 + static_cast<int>(rng.uniform_int(2));
        const int cin = depthwise ? 4 : groups * (1 + static_cast<int>(rng.uniform_int(3)));
        const int cout = depthwise ? 4 : groups * (1 + static_cast<int>(rng.uniform_int(3)));
        const int hw = 8 + static_cast<int>(rng.uniform_int(8));
        auto x = random_tensor<float>(rng, {1, cin, hw, hw});
        auto w3 = random_tensor<float>(rng, {cout, cin / groups, 3, 3});
        auto w5 = sparse5x5_from_dilated3x3(w3);
        Conv2dSpec s3{cin, cout, 3, 3, 1, 2, 2, groups};
        Conv2dSpec s5{cin, cout, 5, 5, 1, 2, 1, groups};
        auto y3 = nn::conv2d_forward<float>(x, w3, nullptr, s3);
        auto y5 = nn::conv2d_forward<float>(x, w5, nullptr, s5);
        REQUIRE(y3.shape == y5.shape);
        for (std::size_t i = 0; i < y3.numel(); ++i) CHECK(y3[i] == y5[i]);
    }
}

TEST_CASE("output geometry and validation errors") {
    Conv2dSpec s{3, 8, 3, 3, 2, 1, 1, 1};
    CHECK(s.out_dim(224, 3) == 112);
    CHECK(s.out_dim(256, 3) == 128);
    Conv2dSpec d{3, 8, 3, 3, 1, 2, 2, 1};
    CHECK(d.out_dim(16, 3) == 16);

    Rng rng(7);
    auto x = random_tensor<float>(rng, {1, 3, 8, 8});
    auto w = random_tensor<float>(rng, {8, 3, 3, 3});
    Conv2dSpec bad{3, 8, 3, 3, 1, 1, 1, 2};  // groups do not divide cin
    CHECK_THROWS(nn::conv2d_forward<float>(x, w, nullptr, bad));

    Conv2dSpec s2{4, 8, 3, 3, 1, 1, 1, 1};  // channel mismatch vs input
    CHECK_THROWS(nn::conv2d_forward<float>(x, w, nullptr, s2));

    // kernel larger than padded input
    Conv2dSpec s3{3, 8, 3, 3, 1, 0, 4, 1};
    auto w3 = random_tensor<float>(rng, {8, 3, 3, 3});
    CHECK_THROWS(nn::conv2d_forward<float>(x, w3, nullptr, s3));
}

TEST_CASE("backward gradients match the oracle definition numerically") {
    // dInput and dWeight verified against central differences of the
    // naive forward, in double precision.
    Rng rng(8);
    Conv2dSpec s{3, 4, 3, 3, 2, 1, 2, 1};
    auto x = random_tensor<double>(rng, {2, 3, 7, 7});
    auto w = random_tensor<double>(rng, {4, 3, 3, 3});
    auto b = random_tensor<double>(rng, {4});
    auto y = nn::conv2d_forward<double>(x, w, &b, s);
    // loss = sum(y * proj)
    auto proj = random_tensor<double>(rng, y.shape);
    TensorT<double> dy = proj;

    TensorT<double> dx(x.shape), dw(w.shape, 0.0), db(b.shape, 0.0);
    nn::conv2d_backward<double>(x, w, s, dy, &dx, &dw, &db);

    auto loss = [&](const TensorT<double>& xx, const TensorT<double>& ww, const TensorT<double>& bb) {
        auto out = reference::conv2d_naive<double>(xx, ww, &bb, s);
        double l = 0.0;
        for (std::size_t i = 0; i < out.numel(); ++i) l += out[i] * proj[i];
        return l;
    };
    const double h = 1e-6;
    for (int trial = 0; trial < 24; ++trial) {
        std::size_t xi = rng.uniform_int(x.numel());
        auto xp = x; xp[xi] += h;
        auto xm = x; xm[xi] -= h;
        double fd = (loss(xp, w, b) - loss(xm, w, b)) / (2 * h);
        CHECK(dx[xi] == doctest::Approx(fd).epsilon(1e-5));

        std::size_t wi = rng.uniform_int(w.numel());
        auto wp = w; wp[wi] += h;
        auto wm = w; wm[wi] -= h;
        fd = (loss(x, wp, b) - loss(x, wm, b)) / (2 * h);
        CHECK(dw[wi] == doctest::Approx(fd).epsilon(1e-5));
    }
    // bias gradient: sum of dy over each output channel
    for (int o = 0; o < 4; ++o) {
        double want = 0.0;
        for (int ni = 0; ni < 2; ++ni)
            for (int oy = 0; oy < y.dim(2); ++oy)
                for (int ox = 0; ox < y.dim(3); ++ox) want += proj.at(ni, o, oy, ox);
        CHECK(db[o] == doctest::Approx(want).epsilon(1e-9));
    }
}
