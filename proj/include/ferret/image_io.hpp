#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ferret/tensor.hpp"

namespace ferret::io {

/// Decodes a PNG or JPEG file into a (3,H,W) float image in [0,1]
/// (8-bit values / 255). Grayscale and paletted inputs are expanded to RGB.
/// Throws std::runtime_error naming the file on any decode problem.
Image load_image(const std::string& path);

/// 8-bit RGB PNG, fixed settings so identical pixels give identical bytes.
void save_png(const std::string& path, const Image& image);

/// Baseline JPEG (8-bit, Huffman, 4:4:4) at the given quality in [1,100].
std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality);
Image decode_jpeg(const std::uint8_t* data, std::size_t size);

/// Round-half-up quantization used whenever [0,1] floats become bytes.
inline std::uint8_t to_u8(float v) {
    float x = v * 255.0f + 0.5f;
    if (x < 0.0f) x = 0.0f;
    if (x > 255.0f) x = 255.0f;
    return static_cast<std::uint8_t>(x);
}

/// Interleaved RGB8 -> planar float [0,1].
Image from_rgb8(const std::uint8_t* rgb, int h, int w);

/// Planar float -> interleaved RGB8 with round-half-up.
std::vector<std::uint8_t> to_rgb8(const Image& image);

}  // namespace ferret::io
