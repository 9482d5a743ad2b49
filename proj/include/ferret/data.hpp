#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ferret/rng.hpp"
#include "ferret/tensor.hpp"

namespace ferret::data {

/// In-memory index of a real/fake directory tree. Entries are ordered
/// real block first then fake block, lexicographic within each class,
/// so iteration order is a pure function of the directory contents.
class LabeledDataset {
  public:
    struct Entry {
        std::string rel_path;
        int label;  // 0 = real, 1 = fake
    };

    std::size_t size() const { return entries_.size(); }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    int label(std::size_t i) const { return entries_[i].label; }
    std::size_t count(int label) const { return label == 0 ? n_real_ : n_fake_; }
    const std::string& root() const { return root_; }

    /// Decoded (3,H,W) float image in [0,1].
    Image image(std::size_t i) const;

    friend LabeledDataset load_dataset(const std::string& root);

  private:
    std::string root_;
    std::vector<Entry> entries_;
    std::vector<std::vector<std::uint8_t>> pixels_;  // interleaved RGB8
    std::vector<std::pair<int, int>> dims_;          // (h, w)
    std::size_t n_real_ = 0, n_fake_ = 0;
};

/// Scans root/{real,fake} for PNG/JPEG files and decodes them all up front.
/// Throws on a missing class directory, an empty class (single-class
/// dataset), or any undecodable file (the message names it).
LabeledDataset load_dataset(const std::string& root);

// ---------------------------------------------------------------------------
// resampling

/// Bilinear resize with half-pixel centers (align-corners=false), edges
/// clamped, output clamped to [0,1].
Image resize_bilinear(const Image& image, int out_h, int out_w);

/// Nearest-neighbor resize with the same coordinate convention.
Image resize_nearest(const Image& image, int out_h, int out_w);

/// Rotation about the image center, bilinear sampling, zero outside.
Image rotate_bilinear(const Image& image, double degrees);

// ---------------------------------------------------------------------------
// transforms

/// Training view: shorter side upscaled to 224 if needed, uniform random
/// 224x224 crop, horizontal flip with probability 1/2. Draw order from rng:
/// crop y, crop x, flip.
Image train_transform(const Image& image, Rng& rng);

/// Evaluation view: shorter side upscaled to 256 if needed (aspect
/// preserved), then a center 256x256 crop. Deterministic.
Image eval_transform(const Image& image);

// ---------------------------------------------------------------------------
// perturbations

struct PerturbationSpec {
    enum class Kind { Jpeg, Resize, Rotate };
    Kind kind = Kind::Jpeg;
    double param = 75.0;  // quality for Jpeg, scale for Resize; unused for Rotate

    void validate() const;
};

/// Parses "jpeg:75", "resize:0.75" or "rotate".
PerturbationSpec parse_perturbation(const std::string& text);

/// Jpeg(q): encode/decode round trip. Resize(s): bilinear scale of both
/// dimensions. Rotate: uniform angle in [-45,45] degrees from rng.
Image perturb(const Image& image, const PerturbationSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// procedural toy corpus

struct ToyCorpusConfig {
    int count_per_class = 10;
    int size = 256;
    std::uint64_t seed = 0;
};

/// Writes root/{real,fake}/*.png plus manifest.json. Real images are
/// 1/f-spectrum colored noise with random flat shapes; fakes are the same
/// generator's output downsampled 2x and upsampled back (nearest neighbor
/// for even indices, bilinear for odd), which plants the decode-smoothing
/// artifacts the detector targets. Byte-identical across reruns with the
/// same config.
void gen_toy_corpus(const std::string& root, const ToyCorpusConfig& config);

}  // namespace ferret::data
