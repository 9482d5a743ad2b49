#include "ferret/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fftw3.h>
#include <json.hpp>

#include "ferret/image_io.hpp"

namespace fs = std::filesystem;

namespace ferret::data {

Image LabeledDataset::image(std::size_t i) const {
    const auto [h, w] = dims_[i];
    return io::from_rgb8(pixels_[i].data(), h, w);
}

namespace {

bool has_image_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

LabeledDataset load_dataset(const std::string& root) {
    LabeledDataset ds;
    ds.root_ = root;
    for (const char* cls : {"real", "fake"}) {
        const fs::path dir = fs::path(root) / cls;
        if (!fs::is_directory(dir))
            throw std::runtime_error("missing subdirectory: " + dir.string());
    }
    for (int label = 0; label < 2; ++label) {
        const char* cls = label == 0 ? "real" : "fake";
        const fs::path dir = fs::path(root) / cls;
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && has_image_ext(e.path()))
                files.push_back(e.path().filename().string());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("single-class dataset: no images under " + dir.string());
        for (const auto& f : files) {
            const std::string rel = std::string(cls) + "/" + f;
            Image img = io::load_image((fs::path(root) / rel).string());  // throws naming the file
            ds.entries_.push_back({rel, label});
            ds.dims_.emplace_back(img.dim(1), img.dim(2));
            ds.pixels_.push_back(io::to_rgb8(img));
            (label == 0 ? ds.n_real_ : ds.n_fake_)++;
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// resampling

Image resize_bilinear(const Image& image, int out_h, int out_w) {
    require(out_h > 0 && out_w > 0, "resize: output dims must be positive");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Image out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    #pragma omp parallel for collapse(2) schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < out_h; ++oy) {
            const double fy = (oy + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            const double wy = fy - y0;
            const int y1 = std::min(std::max(y0 + 1, 0), h - 1);
            y0 = std::min(std::max(y0, 0), h - 1);
            for (int ox = 0; ox < out_w; ++ox) {
                const double fx = (ox + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                const double wx = fx - x0;
                const int x1 = std::min(std::max(x0 + 1, 0), w - 1);
                x0 = std::min(std::max(x0, 0), w - 1);
                const double v =
                    (1 - wy) * ((1 - wx) * image.at(ch, y0, x0) + wx * image.at(ch, y0, x1)) +
                    wy * ((1 - wx) * image.at(ch, y1, x0) + wx * image.at(ch, y1, x1));
                out.at(ch, oy, ox) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

Image resize_nearest(const Image& image, int out_h, int out_w) {
    require(out_h > 0 && out_w > 0, "resize: output dims must be positive");
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Image out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < out_h; ++oy) {
            const int iy = std::min(static_cast<int>((oy + 0.5) * sy), h - 1);
            for (int ox = 0; ox < out_w; ++ox) {
                const int ix = std::min(static_cast<int>((ox + 0.5) * sx), w - 1);
                out.at(ch, oy, ox) = image.at(ch, iy, ix);
            }
        }
    }
    return out;
}

Image rotate_bilinear(const Image& image, double degrees) {
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const double rad = degrees * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    Image out({c, h, w});
    #pragma omp parallel for collapse(2) schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                // inverse mapping: rotate the output coordinate backwards
                const double dy = oy - cy, dx = ox - cx;
                const double sy = cy + (-sn * dx + cs * dy);
                const double sx = cx + (cs * dx + sn * dy);
                const int y0 = static_cast<int>(std::floor(sy));
                const int x0 = static_cast<int>(std::floor(sx));
                const double wy = sy - y0, wx = sx - x0;
                double v = 0.0;
                for (int t = 0; t < 4; ++t) {
                    const int yy = y0 + t / 2, xx = x0 + t % 2;
                    const double wgt = (t / 2 ? wy : 1 - wy) * (t % 2 ? wx : 1 - wx);
                    if (yy >= 0 && yy < h && xx >= 0 && xx < w)
                        v += wgt * image.at(ch, yy, xx);  // zero outside
                }
                out.at(ch, oy, ox) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// transforms

namespace {

Image upscale_shorter_side(const Image& image, int target) {
    const int h = image.dim(1), w = image.dim(2);
    if (std::min(h, w) >= target) return image;
    const double scale = static_cast<double>(target) / std::min(h, w);
    int nh = h <= w ? target : static_cast<int>(std::lround(h * scale));
    int nw = w < h ? target : static_cast<int>(std::lround(w * scale));
    return resize_bilinear(image, nh, nw);
}

Image crop(const Image& image, int oy, int ox, int size) {
    Image out({image.dim(0), size, size});
    for (int c = 0; c < image.dim(0); ++c)
        for (int y = 0; y < size; ++y)
            std::copy_n(&image.at(c, oy + y, ox), size, &out.at(c, y, 0));
    return out;
}

}  // namespace

Image train_transform(const Image& image, Rng& rng) {
    constexpr int kCrop = 224;
    Image base = upscale_shorter_side(image, kCrop);
    const int h = base.dim(1), w = base.dim(2);
    const int oy = static_cast<int>(rng.uniform_int(h - kCrop + 1));
    const int ox = static_cast<int>(rng.uniform_int(w - kCrop + 1));
    Image view = crop(base, oy, ox, kCrop);
    if (rng.bernoulli(0.5)) {
        for (int c = 0; c < view.dim(0); ++c)
            for (int y = 0; y < kCrop; ++y)
                for (int x = 0; x < kCrop / 2; ++x)
                    std::swap(view.at(c, y, x), view.at(c, y, kCrop - 1 - x));
    }
    return view;
}

Image eval_transform(const Image& image) {
    constexpr int kCrop = 256;
    Image base = upscale_shorter_side(image, kCrop);
    const int h = base.dim(1), w = base.dim(2);
    return crop(base, (h - kCrop) / 2, (w - kCrop) / 2, kCrop);
}

// ---------------------------------------------------------------------------
// perturbations

void PerturbationSpec::validate() const {
    switch (kind) {
        case Kind::Jpeg:
            require(param >= 1.0 && param <= 100.0, "jpeg quality must be in [1,100]");
            break;
        case Kind::Resize:
            require(param > 0.0, "resize scale must be positive");
            break;
        case Kind::Rotate:
            break;
    }
}

PerturbationSpec parse_perturbation(const std::string& text) {
    PerturbationSpec spec;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (head == "jpeg") {
        require(colon != std::string::npos, "expected jpeg:<quality>");
        spec.kind = PerturbationSpec::Kind::Jpeg;
        spec.param = std::stod(text.substr(colon + 1));
    } else if (head == "resize") {
        require(colon != std::string::npos, "expected resize:<scale>");
        spec.kind = PerturbationSpec::Kind::Resize;
        spec.param = std::stod(text.substr(colon + 1));
    } else if (head == "rotate") {
        spec.kind = PerturbationSpec::Kind::Rotate;
        spec.param = 0.0;
    } else {
        throw std::invalid_argument("unknown perturbation: " + text);
    }
    spec.validate();
    return spec;
}

Image perturb(const Image& image, const PerturbationSpec& spec, Rng& rng) {
    spec.validate();
    switch (spec.kind) {
        case PerturbationSpec::Kind::Jpeg: {
            const auto bytes = io::encode_jpeg(image, static_cast<int>(spec.param));
            return io::decode_jpeg(bytes.data(), bytes.size());
        }
        case PerturbationSpec::Kind::Resize: {
            const int nh = std::max(1, static_cast<int>(std::lround(image.dim(1) * spec.param)));
            const int nw = std::max(1, static_cast<int>(std::lround(image.dim(2) * spec.param)));
            return resize_bilinear(image, nh, nw);
        }
        case PerturbationSpec::Kind::Rotate: {
            const double deg = rng.uniform(-45.0, 45.0);
            return rotate_bilinear(image, deg);
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// toy corpus

namespace {

/// Zero-mean, unit-variance 1/f^beta noise field via an inverse FFT of a
/// randomly phased spectrum.
std::vector<float> spectral_noise(int size, double beta, Rng& rng) {
    const int half = size / 2 + 1;
    std::vector<fftwf_complex> spec(static_cast<std::size_t>(size) * half);
    for (int ky = 0; ky < size; ++ky) {
        const double fy = static_cast<double>(std::min(ky, size - ky)) / size;
        for (int kx = 0; kx < half; ++kx) {
            const double fx = static_cast<double>(kx) / size;
            const double f = std::sqrt(fy * fy + fx * fx);
            double amp = f > 0.0 ? std::pow(f, -beta) : 0.0;  // zero DC
            const double re = rng.normal() * amp;
            const double im = rng.normal() * amp;
            spec[static_cast<std::size_t>(ky) * half + kx][0] = static_cast<float>(re);
            spec[static_cast<std::size_t>(ky) * half + kx][1] = static_cast<float>(im);
        }
    }
    std::vector<float> field(static_cast<std::size_t>(size) * size);
    fftwf_plan plan = fftwf_plan_dft_c2r_2d(size, size, spec.data(), field.data(), FFTW_ESTIMATE);
    fftwf_execute(plan);
    fftwf_destroy_plan(plan);

    double mean = 0.0;
    for (float v : field) mean += v;
    mean /= field.size();
    double var = 0.0;
    for (float v : field) var += (v - mean) * (v - mean);
    var /= field.size();
    const double inv = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
    for (float& v : field) v = static_cast<float>((v - mean) * inv);
    return field;
}

/// Colored noise plus flat random shapes; the "real" half of the corpus.
Image synth_scene(int size, Rng& rng) {
    const double beta = rng.uniform(0.7, 1.5);
    const double gain = rng.uniform(0.10, 0.22);
    const std::vector<float> shared = spectral_noise(size, beta, rng);
    Image img({3, size, size});
    for (int c = 0; c < 3; ++c) {
        const std::vector<float> own = spectral_noise(size, beta, rng);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * size + x;
                img.at(c, y, x) = static_cast<float>(
                    0.5 + gain * (0.65 * shared[i] + 0.35 * own[i]));
            }
    }

    const int shapes = 3 + static_cast<int>(rng.uniform_int(6));
    for (int s = 0; s < shapes; ++s) {
        const bool ellipse = rng.bernoulli(0.5);
        const double cy = rng.uniform(0.1, 0.9) * size;
        const double cx = rng.uniform(0.1, 0.9) * size;
        const double ry = rng.uniform(0.04, 0.25) * size;
        const double rx = rng.uniform(0.04, 0.25) * size;
        const float alpha = static_cast<float>(rng.uniform(0.55, 1.0));
        float color[3];
        for (auto& v : color) v = static_cast<float>(rng.uniform(0.1, 0.9));
        const int y0 = std::max(0, static_cast<int>(cy - ry)), y1 = std::min(size - 1, static_cast<int>(cy + ry));
        const int x0 = std::max(0, static_cast<int>(cx - rx)), x1 = std::min(size - 1, static_cast<int>(cx + rx));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (ellipse) {
                    const double dy = (y - cy) / ry, dx = (x - cx) / rx;
                    if (dy * dy + dx * dx > 1.0) continue;
                }
                for (int c = 0; c < 3; ++c)
                    img.at(c, y, x) = (1.0f - alpha) * img.at(c, y, x) + alpha * color[c];
            }
        }
    }

    // global contrast/brightness jitter so raw appearance varies per image
    const float contrast = static_cast<float>(rng.uniform(0.85, 1.15));
    const float bright = static_cast<float>(rng.uniform(-0.06, 0.06));
    for (auto& v : img.data)
        v = std::clamp(0.5f + contrast * (v - 0.5f) + bright, 0.0f, 1.0f);
    return img;
}

}  // namespace

void gen_toy_corpus(const std::string& root, const ToyCorpusConfig& config) {
    require(config.count_per_class > 0, "toy corpus: count_per_class must be positive");
    require(config.size >= 32 && config.size % 2 == 0, "toy corpus: size must be even and >= 32");
    const fs::path base(root);
    fs::create_directories(base / "real");
    fs::create_directories(base / "fake");

    Rng stream_root(config.seed);
    nlohmann::ordered_json manifest;
    manifest["count_per_class"] = config.count_per_class;
    manifest["size"] = config.size;
    manifest["seed"] = config.seed;
    manifest["generator"] = {
        {"real", "1/f spectral noise (beta in [0.7,1.5]) + flat shapes + jitter"},
        {"fake", "same scene down 2x (bilinear) then up 2x (even index: nearest, odd: bilinear)"},
    };

    char name[32];
    for (int i = 0; i < config.count_per_class; ++i) {
        Rng rng = stream_root.fork(2 * static_cast<std::uint64_t>(i));
        Image real = synth_scene(config.size, rng);
        std::snprintf(name, sizeof name, "real_%05d.png", i);
        io::save_png((base / "real" / name).string(), real);
    }
    for (int i = 0; i < config.count_per_class; ++i) {
        Rng rng = stream_root.fork(2 * static_cast<std::uint64_t>(i) + 1);
        Image src = synth_scene(config.size, rng);
        Image down = resize_bilinear(src, config.size / 2, config.size / 2);
        Image up = (i % 2 == 0) ? resize_nearest(down, config.size, config.size)
                                : resize_bilinear(down, config.size, config.size);
        std::snprintf(name, sizeof name, "fake_%05d.png", i);
        io::save_png((base / "fake" / name).string(), up);
    }

    std::ofstream mf(base / "manifest.json");
    if (!mf) throw std::runtime_error("cannot write manifest under " + root);
    mf << manifest.dump(2) << "\n";
}

}  // namespace ferret::data
