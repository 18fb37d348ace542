#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"

namespace snowshr {

namespace detail {

// Half-pixel source coordinate, the same convention as bilinear_upsample:
// src = (dst + 0.5) * in/out - 0.5.
inline double resize_src(int o, int in, int out) {
    return (o + 0.5) * static_cast<double>(in) / out - 0.5;
}

}  // namespace detail

// Bilinear resize with clamped borders. Resizing to the same dims is an
// exact copy.
inline InputImage resize_bilinear(const InputImage& img, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1) throw DimensionError("resize_bilinear: non-positive target");
    img.validate();
    if (target_h == img.height && target_w == img.width) return img;

    InputImage out;
    out.height = target_h;
    out.width = target_w;
    out.id = img.id;
    out.rgb.resize(static_cast<std::size_t>(target_h) * target_w * 3);

    std::vector<int> xa(target_w), xb(target_w);
    std::vector<double> tx(target_w);
    for (int ox = 0; ox < target_w; ++ox) {
        const double s = detail::resize_src(ox, img.width, target_w);
        const int f = static_cast<int>(std::floor(s));
        tx[ox] = s - f;
        xa[ox] = std::clamp(f, 0, img.width - 1);
        xb[ox] = std::clamp(f + 1, 0, img.width - 1);
    }
    for (int oy = 0; oy < target_h; ++oy) {
        const double s = detail::resize_src(oy, img.height, target_h);
        const int f = static_cast<int>(std::floor(s));
        const double ty = s - f;
        const int ya = std::clamp(f, 0, img.height - 1);
        const int yb = std::clamp(f + 1, 0, img.height - 1);
        for (int ox = 0; ox < target_w; ++ox)
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(ya, xa[ox], c) * (1.0 - tx[ox]) +
                                   img.at(ya, xb[ox], c) * tx[ox];
                const double bot = img.at(yb, xa[ox], c) * (1.0 - tx[ox]) +
                                   img.at(yb, xb[ox], c) * tx[ox];
                const double v = top * (1.0 - ty) + bot * ty;
                out.at(oy, ox, c) = static_cast<std::uint8_t>(
                    std::clamp(static_cast<int>(std::lround(v)), 0, 255));
            }
    }
    return out;
}

// Nearest-neighbor resize for class masks so indices stay valid.
inline MaskImage resize_nearest(const MaskImage& mask, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1) throw DimensionError("resize_nearest: non-positive target");
    if (target_h == mask.height && target_w == mask.width) return mask;

    MaskImage out;
    out.height = target_h;
    out.width = target_w;
    out.values.resize(static_cast<std::size_t>(target_h) * target_w);
    std::vector<int> xs(target_w);
    for (int ox = 0; ox < target_w; ++ox)
        xs[ox] = std::clamp(
            static_cast<int>(std::floor(detail::resize_src(ox, mask.width, target_w) + 0.5)), 0,
            mask.width - 1);
    for (int oy = 0; oy < target_h; ++oy) {
        const int sy = std::clamp(
            static_cast<int>(std::floor(detail::resize_src(oy, mask.height, target_h) + 0.5)), 0,
            mask.height - 1);
        for (int ox = 0; ox < target_w; ++ox) out.at(oy, ox) = mask.at(sy, xs[ox]);
    }
    return out;
}

}  // namespace snowshr
