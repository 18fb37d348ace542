#pragma once

#include <string>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"

namespace snowshr {

// Non-overlapping grid tiling anchored at the top-left corner, crops in
// row-major order. The grid must fit inside the image.

inline std::vector<InputImage> tile_crops(const InputImage& img, int rows, int cols, int size) {
    if (rows < 1 || cols < 1 || size < 1) throw ConfigError("tile_crops: non-positive grid");
    if (img.height < rows * size || img.width < cols * size)
        throw DimensionError("tile_crops: image " + std::to_string(img.height) + "x" +
                             std::to_string(img.width) + " too small for " + std::to_string(rows) +
                             "x" + std::to_string(cols) + " crops of " + std::to_string(size));
    std::vector<InputImage> crops;
    crops.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            InputImage crop;
            crop.height = size;
            crop.width = size;
            crop.id = img.id + "_r" + std::to_string(r) + "c" + std::to_string(c);
            crop.rgb.resize(static_cast<std::size_t>(size) * size * 3);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        crop.at(y, x, ch) = img.at(r * size + y, c * size + x, ch);
            crops.push_back(std::move(crop));
        }
    return crops;
}

inline std::vector<MaskImage> tile_crops(const MaskImage& mask, int rows, int cols, int size) {
    if (rows < 1 || cols < 1 || size < 1) throw ConfigError("tile_crops: non-positive grid");
    if (mask.height < rows * size || mask.width < cols * size)
        throw DimensionError("tile_crops: mask too small for requested grid");
    std::vector<MaskImage> crops;
    crops.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            MaskImage crop;
            crop.height = size;
            crop.width = size;
            crop.values.resize(static_cast<std::size_t>(size) * size);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) crop.at(y, x) = mask.at(r * size + y, c * size + x);
            crops.push_back(std::move(crop));
        }
    return crops;
}

// Inverse of tile_crops over the covered region.
inline InputImage reassemble(const std::vector<InputImage>& crops, int rows, int cols,
                             const std::string& id = "reassembled") {
    if (crops.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("reassemble: expected " + std::to_string(rows * cols) + " crops, got " +
                             std::to_string(crops.size()));
    const int size = crops[0].height;
    for (const InputImage& c : crops)
        if (c.height != size || c.width != size)
            throw DimensionError("reassemble: crops are not uniform squares");
    InputImage out = InputImage::blank(rows * size, cols * size, id);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const InputImage& crop = crops[static_cast<std::size_t>(r) * cols + c];
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        out.at(r * size + y, c * size + x, ch) = crop.at(y, x, ch);
        }
    return out;
}

inline MaskImage reassemble(const std::vector<MaskImage>& crops, int rows, int cols) {
    if (crops.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("reassemble: expected " + std::to_string(rows * cols) + " crops, got " +
                             std::to_string(crops.size()));
    const int size = crops[0].height;
    for (const MaskImage& c : crops)
        if (c.height != size || c.width != size)
            throw DimensionError("reassemble: crops are not uniform squares");
    MaskImage out = MaskImage::filled(rows * size, cols * size, 0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const MaskImage& crop = crops[static_cast<std::size_t>(r) * cols + c];
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) out.at(r * size + y, c * size + x) = crop.at(y, x);
        }
    return out;
}

}  // namespace snowshr
