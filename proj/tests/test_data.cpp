#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ferret/data.hpp"
#include "ferret/image_io.hpp"
#include "ferret/lpd.hpp"
#include "ferret/rng.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace ferret;
using test::random_image;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

double psnr(const Image& a, const Image& b) {
    double mse = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= a.numel();
    return 10.0 * std::log10(1.0 / mse);
}

double mean_abs(const Image& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.numel(); ++i) s += std::abs(m[i]);
    return s / m.numel();
}

}  // namespace

TEST_CASE("png save/load round trip is exact at 8-bit resolution") {
    TempDir tmp("ferret_png_test");
    Rng rng(1);
    Image img = random_image(rng, 3, 21, 17);
    const std::string path = (tmp.path / "a.png").string();
    io::save_png(path, img);
    Image back = io::load_image(path);
    REQUIRE(back.shape == img.shape);
    for (std::size_t i = 0; i < img.numel(); ++i)
        CHECK(std::abs(back[i] - img[i]) <= 0.5f / 255.0f + 1e-6f);
    // a second save is byte-identical
    const std::string path2 = (tmp.path / "b.png").string();
    io::save_png(path2, img);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
}

TEST_CASE("jpeg encode/decode at quality 100 is high fidelity") {
    Rng rng(2);
    // smooth image: quantization noise should be tiny
    Image img({3, 32, 32});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                img.at(c, y, x) = 0.3f + 0.2f * std::sin(0.2f * x + 0.3f * y + c);
    auto bytes = io::encode_jpeg(img, 100);
    Image back = io::decode_jpeg(bytes.data(), bytes.size());
    REQUIRE(back.shape == img.shape);
    CHECK(psnr(img, back) > 40.0);
}

TEST_CASE("load_dataset: ordering, counts and error cases") {
    TempDir tmp("ferret_ds_test");
    fs::create_directories(tmp.path / "real");
    fs::create_directories(tmp.path / "fake");
    Rng rng(3);
    for (int i = 0; i < 3; ++i)
        io::save_png((tmp.path / "real" / ("r" + std::to_string(i) + ".png")).string(),
                     random_image(rng, 3, 8, 8));
    for (int i = 0; i < 2; ++i)
        io::save_png((tmp.path / "fake" / ("f" + std::to_string(i) + ".png")).string(),
                     random_image(rng, 3, 8, 8));

    auto ds = data::load_dataset(tmp.path.string());
    REQUIRE(ds.size() == 5);
    CHECK(ds.count(0) == 3);
    CHECK(ds.count(1) == 2);
    // real block first, then fake: labels (0,0,0,1,1)
    std::vector<int> labels;
    for (std::size_t i = 0; i < ds.size(); ++i) labels.push_back(ds.label(i));
    CHECK(labels == std::vector<int>({0, 0, 0, 1, 1}));
    CHECK(ds.entry(0).rel_path == "real/r0.png");
    CHECK(ds.image(0).shape == std::vector<int>({3, 8, 8}));

    // missing subdirectory
    TempDir tmp2("ferret_ds_missing");
    fs::create_directories(tmp2.path / "real");
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp2.path.string()),
                         doctest::Contains("missing subdirectory"), std::runtime_error);

    // single-class dataset
    fs::create_directories(tmp2.path / "fake");
    io::save_png((tmp2.path / "real" / "r.png").string(), random_image(rng, 3, 8, 8));
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp2.path.string()),
                         doctest::Contains("single-class"), std::runtime_error);

    // corrupted file named in the error
    {
        std::ofstream bad(tmp.path / "fake" / "broken.png", std::ios::binary);
        bad << "\x89PNG\r\n\x1a\n___truncated___";
    }
    try {
        data::load_dataset(tmp.path.string());
        FAIL("expected decode error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("broken.png") != std::string::npos);
    }
}

TEST_CASE("eval_transform geometry") {
    Rng rng(4);
    // identity on 256^2, idempotent
    Image img = random_image(rng, 3, 256, 256);
    Image once = data::eval_transform(img);
    CHECK(test::bitwise_equal(once, img));
    CHECK(test::bitwise_equal(data::eval_transform(once), once));

    // central window of a 512^2 image at offset (128,128)
    Image big = random_image(rng, 3, 512, 512);
    Image view = data::eval_transform(big);
    REQUIRE(view.shape == std::vector<int>({3, 256, 256}));
    bool match = true;
    for (int c = 0; c < 3 && match; ++c)
        for (int y = 0; y < 256 && match; ++y)
            for (int x = 0; x < 256 && match; ++x)
                match = view.at(c, y, x) == big.at(c, 128 + y, 128 + x);
    CHECK(match);

    // 300x200: shorter side to 256 -> 384x256, center crop offset (64,0)
    Image tall = random_image(rng, 3, 300, 200);
    Image ev = data::eval_transform(tall);
    REQUIRE(ev.shape == std::vector<int>({3, 256, 256}));
    Image resized = data::resize_bilinear(tall, 384, 256);
    bool match2 = true;
    for (int c = 0; c < 3 && match2; ++c)
        for (int y = 0; y < 256 && match2; ++y)
            for (int x = 0; x < 256 && match2; ++x)
                match2 = ev.at(c, y, x) == resized.at(c, 64 + y, x);
    CHECK(match2);
}

TEST_CASE("train_transform: degenerate crop, determinism, flip") {
    Rng rng(5);
    Image img = random_image(rng, 3, 224, 224);
    Rng t1(100), t2(100);
    Image a = data::train_transform(img, t1);
    Image b = data::train_transform(img, t2);
    CHECK(test::bitwise_equal(a, b));
    // 224^2 input: the only variation is the flip
    bool is_orig = test::bitwise_equal(a, img);
    bool is_flip = test::bitwise_equal(a, test::hflip(img));
    CHECK((is_orig || is_flip));
}

TEST_CASE("train_transform crop offsets are uniform") {
    // position-coded pixels let the crop offset be recovered from the view
    const int side = 240, range = side - 224 + 1;  // offsets in {0..16}
    Image img({1, side, side});
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            img.at(0, y, x) = static_cast<float>(y * side + x) / (side * side);

    const int draws = 10000;
    std::vector<int> hy(range, 0), hx(range, 0);
    int flips = 0;
    Rng rng(42);
    for (int i = 0; i < draws; ++i) {
        Image v = data::train_transform(img, rng);
        // corner pixel decodes to (y,x); flipped views read the top-right
        float c00 = v.at(0, 0, 0), c01 = v.at(0, 0, 223);
        const bool flipped = c00 > c01;
        const int code = static_cast<int>(std::lround((flipped ? c01 : c00) * side * side));
        hy[code / side]++;
        hx[code % side]++;
        flips += flipped;
    }
    const double expect = static_cast<double>(draws) / range;
    const double sigma = std::sqrt(draws * (1.0 / range) * (1.0 - 1.0 / range));
    for (int i = 0; i < range; ++i) {
        CHECK(std::abs(hy[i] - expect) < 3 * sigma);
        CHECK(std::abs(hx[i] - expect) < 3 * sigma);
    }
    const double fsigma = std::sqrt(draws * 0.25);
    CHECK(std::abs(flips - draws / 2) < 3 * fsigma);
}

TEST_CASE("perturb: resize dimension contracts and rotate determinism") {
    Rng rng(6);
    Image img = random_image(rng, 3, 256, 256);
    Rng r1(1), r2(1);
    auto down = data::perturb(img, data::parse_perturbation("resize:0.75"), r1);
    CHECK(down.shape == std::vector<int>({3, 192, 192}));
    auto up = data::perturb(img, data::parse_perturbation("resize:1.25"), r1);
    CHECK(up.shape == std::vector<int>({3, 320, 320}));

    auto rot1 = data::perturb(img, data::parse_perturbation("rotate"), r1);
    Rng rot_rng_a(9), rot_rng_b(9);
    auto ra = data::perturb(img, data::parse_perturbation("rotate"), rot_rng_a);
    auto rb = data::perturb(img, data::parse_perturbation("rotate"), rot_rng_b);
    CHECK(test::bitwise_equal(ra, rb));

    CHECK_THROWS(data::parse_perturbation("blur:1"));
    CHECK_THROWS(data::parse_perturbation("jpeg:0"));
    CHECK_THROWS(data::parse_perturbation("resize:-1"));

    // value range preserved
    for (std::size_t i = 0; i < rot1.numel(); ++i) {
        CHECK(rot1[i] >= 0.0f);
        CHECK(rot1[i] <= 1.0f);
    }
}

TEST_CASE("toy corpus: determinism, structure, LPD contrast, jpeg PSNR") {
    TempDir tmp("ferret_toy_test");
    data::ToyCorpusConfig cfg;
    cfg.count_per_class = 10;
    cfg.size = 128;
    cfg.seed = 7;
    data::gen_toy_corpus((tmp.path / "a").string(), cfg);
    data::gen_toy_corpus((tmp.path / "b").string(), cfg);

    // byte-identical across reruns
    for (const char* cls : {"real", "fake"}) {
        for (int i = 0; i < cfg.count_per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%s_%05d.png", cls, i);
            std::ifstream fa(tmp.path / "a" / cls / name, std::ios::binary);
            std::ifstream fb(tmp.path / "b" / cls / name, std::ios::binary);
            REQUIRE(fa.good());
            REQUIRE(fb.good());
            std::string ba((std::istreambuf_iterator<char>(fa)), {});
            std::string bb((std::istreambuf_iterator<char>(fb)), {});
            CHECK(ba == bb);
        }
    }

    auto ds = data::load_dataset((tmp.path / "a").string());
    CHECK(ds.size() == 20);
    CHECK(ds.count(0) == 10);
    CHECK(ds.count(1) == 10);

    // bilinear-upsampled fakes (odd indices) have lower mean |LPD| than
    // their real counterparts
    lpd::NeighborhoodSpec spec;  // (3, Mask, Median)
    int lower = 0, pairs = 0;
    for (int i = 1; i < cfg.count_per_class; i += 2) {
        char rname[32], fname[32];
        std::snprintf(rname, sizeof rname, "real_%05d.png", i);
        std::snprintf(fname, sizeof fname, "fake_%05d.png", i);
        Image real = io::load_image((tmp.path / "a" / "real" / rname).string());
        Image fake = io::load_image((tmp.path / "a" / "fake" / fname).string());
        ++pairs;
        if (mean_abs(lpd::lpd_map(fake, spec)) < mean_abs(lpd::lpd_map(real, spec))) ++lower;
    }
    CHECK(lower >= pairs * 9 / 10);

    // jpeg round trip at quality 100 on corpus images
    Image sample = ds.image(0);
    auto bytes = io::encode_jpeg(sample, 100);
    Image back = io::decode_jpeg(bytes.data(), bytes.size());
    CHECK(psnr(sample, back) > 40.0);

    // degenerate config
    data::ToyCorpusConfig zero;
    zero.count_per_class = 0;
    CHECK_THROWS(data::gen_toy_corpus((tmp.path / "zero").string(), zero));
}
