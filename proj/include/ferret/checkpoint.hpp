#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ferret/nn.hpp"
#include "ferret/tensor.hpp"

namespace ferret::ckpt {

/// Container layout: 8-byte magic "FERRETCK", u32 little-endian version,
/// u32 little-endian manifest byte length, UTF-8 JSON manifest, then the
/// raw little-endian float32 payloads in manifest order. The manifest
/// records tensor names, shapes, dtype, byte offsets (relative to the
/// payload start) and the RNG seed in effect when the file was written.
inline constexpr char kMagic[8] = {'F', 'E', 'R', 'R', 'E', 'T', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;

void save_checkpoint(const std::string& path, const std::vector<nn::NamedTensor<float>>& state,
                     std::uint64_t seed);

struct LoadedCheckpoint {
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;  // manifest order

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Copies loaded tensors into the model state by name; every state tensor
/// must be present with a matching shape.
void restore_state(const LoadedCheckpoint& loaded, std::vector<nn::NamedTensor<float>> state);

}  // namespace ferret::ckpt
