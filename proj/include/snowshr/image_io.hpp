#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "snowshr/classes.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"

// Binary PPM (P6) for RGB images and binary PGM (P5) for class masks. Both
// are 8-bit and round-trip losslessly.

namespace snowshr {

namespace detail {

inline constexpr int kMaxImageDim = 1 << 15;

inline std::vector<char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> bytes(static_cast<std::size_t>(len));
    if (len > 0) in.read(bytes.data(), len);
    if (!in) throw IoError("failed reading '" + path + "'");
    return bytes;
}

inline void write_file_bytes(const std::string& path, const char* data, std::size_t len) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(data, static_cast<std::streamsize>(len));
    if (!out) throw IoError("failed writing '" + path + "'");
}

// Reads one whitespace-delimited token, skipping '#' comments to end of line.
inline std::string pnm_token(const std::vector<char>& bytes, std::size_t& pos,
                             const std::string& path) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#')
        tok.push_back(bytes[pos++]);
    if (tok.empty()) throw FormatError("'" + path + "': truncated header");
    return tok;
}

inline int pnm_int(const std::vector<char>& bytes, std::size_t& pos, const std::string& path) {
    const std::string tok = pnm_token(bytes, pos, path);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw FormatError("'" + path + "': bad header field '" + tok + "'");
    }
}

struct PnmHeader {
    int width, height;
    std::size_t data_pos;
};

inline PnmHeader parse_pnm(const std::vector<char>& bytes, const char* magic,
                           const std::string& path) {
    std::size_t pos = 0;
    if (pnm_token(bytes, pos, path) != magic)
        throw FormatError("'" + path + "': not a " + std::string(magic) + " file");
    PnmHeader h{};
    h.width = pnm_int(bytes, pos, path);
    h.height = pnm_int(bytes, pos, path);
    const int maxval = pnm_int(bytes, pos, path);
    if (h.width < 1 || h.height < 1 || h.width > kMaxImageDim || h.height > kMaxImageDim)
        throw IoError("'" + path + "': unreasonable dimensions " + std::to_string(h.width) + "x" +
                      std::to_string(h.height));
    if (maxval != 255) throw FormatError("'" + path + "': only 8-bit depth supported");
    // exactly one whitespace byte separates header and raster
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw FormatError("'" + path + "': malformed header");
    h.data_pos = pos + 1;
    return h;
}

}  // namespace detail

inline void save_image(const InputImage& img, const std::string& path) {
    img.validate();
    char header[64];
    const int n = std::snprintf(header, sizeof header, "P6\n%d %d\n255\n", img.width, img.height);
    std::string out(header, static_cast<std::size_t>(n));
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    detail::write_file_bytes(path, out.data(), out.size());
}

inline InputImage load_image(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    const auto h = detail::parse_pnm(bytes, "P6", path);
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height * 3;
    if (bytes.size() - h.data_pos < need)
        throw FormatError("'" + path + "': raster truncated");
    InputImage img;
    img.width = h.width;
    img.height = h.height;
    img.id = std::filesystem::path(path).stem().string();
    img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_pos),
                   bytes.begin() + static_cast<std::ptrdiff_t>(h.data_pos + need));
    return img;
}

inline void save_mask(const MaskImage& mask, const std::string& path) {
    char header[64];
    const int n = std::snprintf(header, sizeof header, "P5\n%d %d\n255\n", mask.width, mask.height);
    std::string out(header, static_cast<std::size_t>(n));
    out.append(reinterpret_cast<const char*>(mask.values.data()), mask.values.size());
    detail::write_file_bytes(path, out.data(), out.size());
}

inline MaskImage load_mask(const std::string& path, int num_classes = kNumClasses) {
    const auto bytes = detail::read_file_bytes(path);
    const auto h = detail::parse_pnm(bytes, "P5", path);
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() - h.data_pos < need)
        throw FormatError("'" + path + "': raster truncated");
    MaskImage mask;
    mask.width = h.width;
    mask.height = h.height;
    mask.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_pos),
                       bytes.begin() + static_cast<std::ptrdiff_t>(h.data_pos + need));
    mask.validate(num_classes);
    return mask;
}

}  // namespace snowshr
