#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/tensor.hpp"

namespace snowshr {

// RGB raster, 8-bit per channel at rest, interleaved HWC. Computation
// happens in [0,1] floats (see to_tensor / from_tensor).
struct InputImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;  // height*width*3, row-major, interleaved
    std::string id;

    std::uint8_t& at(int y, int x, int c) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    static InputImage blank(int h, int w, std::string id = {}) {
        InputImage im;
        im.height = h;
        im.width = w;
        im.rgb.assign(static_cast<std::size_t>(h) * w * 3, 0);
        im.id = std::move(id);
        return im;
    }

    void validate() const {
        if (height <= 0 || width <= 0)
            throw DimensionError("image '" + id + "': non-positive dimensions");
        if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
            throw DimensionError("image '" + id + "': buffer size does not match dimensions");
    }
};

// 2-D raster of class indices, one byte per pixel. Doubles as a binary mask
// when values are restricted to {0,1}.
struct MaskImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }

    static MaskImage filled(int h, int w, std::uint8_t v) {
        MaskImage m;
        m.height = h;
        m.width = w;
        m.values.assign(static_cast<std::size_t>(h) * w, v);
        return m;
    }

    // Every value must be < num_classes.
    void validate(int num_classes) const {
        if (height <= 0 || width <= 0) throw DimensionError("mask: non-positive dimensions");
        if (values.size() != static_cast<std::size_t>(height) * width)
            throw DimensionError("mask: buffer size does not match dimensions");
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                int v = at(y, x);
                if (v >= num_classes)
                    throw LabelError("mask: label " + std::to_string(v) + " at pixel (" +
                                     std::to_string(y) + "," + std::to_string(x) + ") exceeds " +
                                     std::to_string(num_classes - 1));
            }
    }
};

// u8 [0,255] -> float [0,1], NCHW with N=1.
inline Tensor to_tensor(const InputImage& im) {
    im.validate();
    Tensor t = Tensor::zeros({1, 3, im.height, im.width});
    float* p = t.data();
    const std::size_t plane = static_cast<std::size_t>(im.height) * im.width;
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) {
            const std::size_t px = static_cast<std::size_t>(y) * im.width + x;
            for (int c = 0; c < 3; ++c) p[c * plane + px] = im.rgb[px * 3 + c] / 255.0f;
        }
    return t;
}

// float [0,1] (clamped) -> u8. Inverse of to_tensor up to 8-bit rounding.
inline InputImage from_tensor(const Tensor& t, std::string id = {}) {
    if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != 3)
        throw DimensionError("from_tensor: expected (1,3,H,W), got " + shape_str(t.shape()));
    InputImage im = InputImage::blank(t.dim(2), t.dim(3), std::move(id));
    const float* p = t.data();
    const std::size_t plane = static_cast<std::size_t>(im.height) * im.width;
    for (std::size_t px = 0; px < plane; ++px)
        for (int c = 0; c < 3; ++c) {
            float v = p[c * plane + px];
            v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
            im.rgb[px * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    return im;
}

}  // namespace snowshr
