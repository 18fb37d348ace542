#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "snowshr/classes.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"
#include "snowshr/resize.hpp"

namespace snowshr {

// 4x4 grid, row-major fill, mid-gray padding for missing cells. Cells are
// resized to a uniform size.
inline InputImage montage_4x4(const std::vector<InputImage>& images, int cell_h, int cell_w,
                              const std::string& id = "montage") {
    if (cell_h < 1 || cell_w < 1) throw ConfigError("montage_4x4: non-positive cell size");
    constexpr int kGrid = 4;
    InputImage out = InputImage::blank(kGrid * cell_h, kGrid * cell_w, id);
    std::fill(out.rgb.begin(), out.rgb.end(), static_cast<std::uint8_t>(128));
    const std::size_t n = std::min<std::size_t>(images.size(), kGrid * kGrid);
    for (std::size_t i = 0; i < n; ++i) {
        const InputImage cell = resize_bilinear(images[i], cell_h, cell_w);
        const int r = static_cast<int>(i) / kGrid, c = static_cast<int>(i) % kGrid;
        for (int y = 0; y < cell_h; ++y)
            for (int x = 0; x < cell_w; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    out.at(r * cell_h + y, c * cell_w + x, ch) = cell.at(y, x, ch);
    }
    return out;
}

// Colorizes a class mask with the class palette, for montage rows showing
// predicted labels.
inline InputImage colorize_mask(const MaskImage& mask, const std::string& id = "mask") {
    InputImage out = InputImage::blank(mask.height, mask.width, id);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const ClassColor& col = kClassColors[mask.at(y, x) % kNumClasses];
            out.at(y, x, 0) = static_cast<std::uint8_t>(std::lround(col.r * 255.0f));
            out.at(y, x, 1) = static_cast<std::uint8_t>(std::lround(col.g * 255.0f));
            out.at(y, x, 2) = static_cast<std::uint8_t>(std::lround(col.b * 255.0f));
        }
    return out;
}

}  // namespace snowshr
