#pragma once

#include <array>
#include <string>

namespace snowshr {

// Fixed semantic class indexing used by masks, the segmenter head, metrics
// and the hazard math. Index 0 is background and participates in mean
// metrics like any other class.
inline constexpr int kNumClasses = 6;
inline constexpr int kClassBackground = 0;
inline constexpr int kClassRoad = 1;
inline constexpr int kClassPoleSign = 2;
inline constexpr int kClassGreen = 3;
inline constexpr int kClassSnow = 4;
inline constexpr int kClassSky = 5;

inline const std::array<std::string, kNumClasses>& class_names() {
    static const std::array<std::string, kNumClasses> names = {
        "background", "road", "pole-sign", "green", "snow", "sky"};
    return names;
}

// Base albedo per class, RGB in [0,1]; the scene renderer perturbs these
// with seeded texture noise.
struct ClassColor {
    float r, g, b;
};

inline constexpr std::array<ClassColor, kNumClasses> kClassColors = {{
    {0.45f, 0.36f, 0.28f},  // background soil
    {0.28f, 0.28f, 0.30f},  // road asphalt
    {0.72f, 0.18f, 0.15f},  // pole-sign
    {0.18f, 0.52f, 0.20f},  // green vegetation
    {0.93f, 0.95f, 0.99f},  // snow
    {0.52f, 0.68f, 0.92f},  // sky
}};

}  // namespace snowshr
