#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/image_io.hpp"
#include "snowshr/params.hpp"

// Checkpoint container: magic "SNWG", format version (u32 LE), tensor count
// (u32 LE), then per tensor: name length (u16 LE), name bytes, rank (u8),
// dims (u32 LE each), raw float32 LE data. Numeric metadata rides along as
// scalar tensors under the "__meta__/" prefix.

namespace snowshr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");
static_assert(sizeof(float) == 4, "checkpoint serialization assumes 32-bit floats");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'N', 'W', 'G'};
inline constexpr const char* kMetaPrefix = "__meta__/";

struct Checkpoint {
    ParamSet params;
    std::map<std::string, float> meta;
};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const std::vector<char>& bytes, std::size_t& pos, const std::string& path) {
    if (bytes.size() - pos < sizeof(T))
        throw FormatError("checkpoint '" + path + "': truncated");
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

inline void append_tensor(std::string& out, const std::string& name, const Tensor& t) {
    if (name.size() > 0xFFFF) throw ContractError("checkpoint: tensor name too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.append(name);
    if (t.rank() > 0xFF) throw ContractError("checkpoint: tensor rank too large");
    out.push_back(static_cast<char>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim(i)));
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
}

}  // namespace detail

inline void save_checkpoint(const ParamSet& params, const std::string& path,
                            const std::vector<std::pair<std::string, float>>& meta = {}) {
    std::string out;
    out.append(kCheckpointMagic, 4);
    detail::put_le<std::uint32_t>(out, kCheckpointVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + meta.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        detail::append_tensor(out, params.names()[i], params.tensor(i));
    for (const auto& [key, value] : meta)
        detail::append_tensor(out, kMetaPrefix + key, Tensor::scalar_of(value));
    detail::write_file_bytes(path, out.data(), out.size());
}

inline Checkpoint load_checkpoint(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    std::size_t pos = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw FormatError("checkpoint '" + path + "': bad magic");
    pos = 4;
    const auto version = detail::get_le<std::uint32_t>(bytes, pos, path);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint '" + path + "': unsupported version " +
                          std::to_string(version));
    const auto count = detail::get_le<std::uint32_t>(bytes, pos, path);

    Checkpoint ckpt;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::get_le<std::uint16_t>(bytes, pos, path);
        if (bytes.size() - pos < name_len)
            throw FormatError("checkpoint '" + path + "': truncated");
        std::string name(bytes.data() + pos, name_len);
        pos += name_len;
        const auto rank = static_cast<std::uint8_t>(detail::get_le<char>(bytes, pos, path));
        Shape shape;
        std::size_t numel = 1;
        for (int d = 0; d < rank; ++d) {
            const auto dim = detail::get_le<std::uint32_t>(bytes, pos, path);
            shape.push_back(static_cast<int>(dim));
            numel *= dim;
        }
        if (bytes.size() - pos < numel * sizeof(float))
            throw FormatError("checkpoint '" + path + "': truncated");
        std::vector<float> data(numel);
        std::memcpy(data.data(), bytes.data() + pos, numel * sizeof(float));
        pos += numel * sizeof(float);

        if (name.rfind(kMetaPrefix, 0) == 0) {
            if (numel != 1)
                throw FormatError("checkpoint '" + path + "': metadata entry '" + name +
                                  "' is not scalar");
            ckpt.meta[name.substr(std::strlen(kMetaPrefix))] = data[0];
        } else {
            ckpt.params.add(name, Tensor::from_data(shape, std::move(data)));
        }
    }
    if (pos != bytes.size())
        throw FormatError("checkpoint '" + path + "': trailing bytes");
    return ckpt;
}

// Stable 64-bit FNV-1a over a file, for byte-identity comparisons in tests
// and manifests (not a cryptographic digest).
inline std::uint64_t file_fingerprint(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace snowshr
