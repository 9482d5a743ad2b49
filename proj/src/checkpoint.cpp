#include "ferret/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace ferret::ckpt {

namespace {

static_assert(sizeof(float) == 4, "float must be 32-bit");

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

bool host_is_little_endian() {
    const std::uint32_t probe = 1;
    return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

void write_f32_le(std::ostream& os, const float* data, std::size_t count) {
    if (host_is_little_endian()) {
        os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
        return;
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        write_u32(os, bits);
    }
}

void read_f32_le(std::istream& is, float* data, std::size_t count) {
    if (host_is_little_endian()) {
        is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 4));
        return;
    }
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = read_u32(is);
        std::memcpy(&data[i], &bits, 4);
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<nn::NamedTensor<float>>& state,
                     std::uint64_t seed) {
    nlohmann::ordered_json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = seed;
    auto& tensors = manifest["tensors"] = nlohmann::ordered_json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : state) {
        nlohmann::ordered_json t;
        t["name"] = name;
        t["shape"] = tensor->shape;
        t["dtype"] = "f32";
        t["offset"] = offset;
        t["nbytes"] = tensor->numel() * 4;
        tensors.push_back(std::move(t));
        offset += tensor->numel() * 4;
    }
    const std::string mbytes = manifest.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(mbytes.size()));
    os.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
    for (const auto& [name, tensor] : state) write_f32_le(os, tensor->ptr(), tensor->numel());
    if (!os) throw std::runtime_error("write failure on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    const std::uint32_t mlen = read_u32(is);
    std::string mbytes(mlen, '\0');
    is.read(mbytes.data(), mlen);
    if (!is) throw std::runtime_error("truncated checkpoint manifest: " + path);

    nlohmann::json manifest = nlohmann::json::parse(mbytes);
    LoadedCheckpoint out;
    out.seed = manifest.value("seed", 0ULL);
    for (const auto& t : manifest.at("tensors")) {
        const std::string name = t.at("name");
        const std::vector<int> shape = t.at("shape").get<std::vector<int>>();
        if (t.at("dtype") != "f32")
            throw std::runtime_error("unsupported tensor dtype in " + path);
        Tensor tensor(shape);
        read_f32_le(is, tensor.ptr(), tensor.numel());
        if (!is) throw std::runtime_error("truncated checkpoint payload: " + path);
        out.tensors.emplace_back(name, std::move(tensor));
    }
    return out;
}

void restore_state(const LoadedCheckpoint& loaded, std::vector<nn::NamedTensor<float>> state) {
    for (auto& [name, slot] : state) {
        const Tensor* src = loaded.find(name);
        if (!src) throw std::runtime_error("checkpoint is missing tensor: " + name);
        if (src->shape != slot->shape)
            throw std::runtime_error("checkpoint shape mismatch for " + name + ": file " +
                                     shape_str(src->shape) + " vs model " + shape_str(slot->shape));
        slot->data = src->data;
    }
}

}  // namespace ferret::ckpt
