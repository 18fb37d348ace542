#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "snowshr/classes.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"
#include "snowshr/rng.hpp"

namespace snowshr {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Lattice value in [0,1) from integer cell coordinates. Hash-based, so the
// field is a pure function of position and seeds regardless of evaluation
// order.
inline double lattice_value(std::int64_t cx, std::int64_t cy, std::uint64_t salt,
                            std::uint64_t seed) {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(cx) * 0x100000001b3ull ^
                            mix64(static_cast<std::uint64_t>(cy) ^ mix64(salt ^ seed)));
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

inline double value_noise(double x, double y, std::uint64_t salt, std::uint64_t seed) {
    const std::int64_t cx = static_cast<std::int64_t>(std::floor(x));
    const std::int64_t cy = static_cast<std::int64_t>(std::floor(y));
    const double fx = x - cx, fy = y - cy;
    const double ux = fx * fx * (3.0 - 2.0 * fx);
    const double uy = fy * fy * (3.0 - 2.0 * fy);
    const double v00 = lattice_value(cx, cy, salt, seed);
    const double v10 = lattice_value(cx + 1, cy, salt, seed);
    const double v01 = lattice_value(cx, cy + 1, salt, seed);
    const double v11 = lattice_value(cx + 1, cy + 1, salt, seed);
    return (v00 * (1 - ux) + v10 * ux) * (1 - uy) + (v01 * (1 - ux) + v11 * ux) * uy;
}

// Octaves double in frequency and halve in amplitude; result in [0,1).
inline double octave_noise(double x, double y, double scale, int octaves, std::uint64_t salt,
                           std::uint64_t seed) {
    double sum = 0.0, amp = 1.0, norm = 0.0, freq = 1.0 / scale;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(x * freq, y * freq, salt + 131 * o, seed);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

}  // namespace detail

struct SceneSpec {
    int height = 96;
    int width = 96;
    float horizon = 0.34f;      // fraction of height where the road vanishes
    float road_near = 0.82f;    // road width at the bottom row / image width
    float road_far = 0.08f;     // road width at the horizon row / image width
    float road_offset = 0.0f;   // road center shift / image width
    float coverage = 0.5f;      // target snow fraction over road pixels
    float snow_scale = 9.0f;    // base snow-noise wavelength in pixels
    int pole_count = 2;
    float green_band = 0.10f;   // vegetation band height / image height
    std::uint64_t seed = 1;
    std::string id = "scene";

    void validate() const {
        if (height < 16 || width < 16) throw ConfigError("SceneSpec: dims must be at least 16");
        if (!(horizon > 0.05f && horizon < 0.9f))
            throw ConfigError("SceneSpec: horizon must be in (0.05, 0.9)");
        if (!(road_far > 0.0f && road_near > 0.0f && road_far <= road_near && road_near <= 1.0f))
            throw ConfigError("SceneSpec: road widths must satisfy 0 < far <= near <= 1");
        if (std::fabs(road_offset) + road_near / 2.0f > 0.5f)
            throw ConfigError("SceneSpec: road trapezoid leaves the frame");
        if (!(coverage >= 0.0f && coverage <= 1.0f))
            throw ConfigError("SceneSpec: coverage must be in [0,1]");
        if (snow_scale < 2.0f) throw ConfigError("SceneSpec: snow_scale must be at least 2");
        if (pole_count < 0 || green_band < 0.0f)
            throw ConfigError("SceneSpec: negative pole count or green band");
    }
};

struct SynthScene {
    InputImage snow_image, bare_image;
    MaskImage truth_mask;   // labels with snow overlaid
    MaskImage bare_mask;    // labels of the uncovered scene
    long shr_num = 0;       // road pixels under snow
    long shr_den = 0;       // road pixels total
    SceneSpec spec;
};

// Renders one scene pair. The snow threshold is the order statistic of the
// snow-noise field over road pixels, so covered-road count hits
// round(p * road pixels) exactly unless the field ties (degenerate scale).
inline SynthScene synth_scene(const SceneSpec& spec) {
    spec.validate();
    const int H = spec.height, W = spec.width;
    const int horizon_y = std::clamp(static_cast<int>(std::lround(spec.horizon * H)), 1, H - 2);
    const int green_rows = static_cast<int>(std::lround(spec.green_band * H));
    const double center = W * (0.5 + spec.road_offset);
    const double near_hw = 0.5 * spec.road_near * W;
    const double far_hw = 0.5 * spec.road_far * W;

    SynthScene scene;
    scene.spec = spec;
    scene.bare_mask = MaskImage::filled(H, W, kClassBackground);

    auto road_halfw = [&](int y) {
        const double t = H - 1 == horizon_y
                             ? 1.0
                             : static_cast<double>(y - horizon_y) / (H - 1 - horizon_y);
        return far_hw + (near_hw - far_hw) * t;
    };

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::uint8_t lab;
            if (y < horizon_y) {
                lab = kClassSky;
            } else if (std::fabs(x + 0.5 - center) <= road_halfw(y)) {
                lab = kClassRoad;
            } else if (y < horizon_y + green_rows) {
                lab = kClassGreen;
            } else {
                lab = kClassBackground;
            }
            scene.bare_mask.at(y, x) = lab;
        }

    // poles stand off-road; the trapezoid narrows upward so a bar clear of
    // the road at its base stays clear above
    Rng rng(spec.seed);
    for (int i = 0; i < spec.pole_count; ++i) {
        const int base_y = rng.uniform_int(horizon_y + (H - horizon_y) / 3, H - 2);
        const int side = i % 2 == 0 ? 1 : -1;
        const double edge = road_halfw(base_y);
        const int margin = rng.uniform_int(4, 7);
        int px = static_cast<int>(std::lround(center + side * (edge + margin)));
        px = std::clamp(px, 2, W - 3);
        const int top_y = std::max(1, std::min(base_y - 5, horizon_y - rng.uniform_int(0, H / 8)));
        for (int y = top_y; y <= base_y; ++y)
            for (int dx = 0; dx <= 1; ++dx) {
                const int x = px + dx;
                if (scene.bare_mask.at(y, x) != kClassRoad)
                    scene.bare_mask.at(y, x) = kClassPoleSign;
            }
        const int sign = 2;
        for (int y = std::max(0, top_y - sign); y < top_y; ++y)
            for (int x = std::max(0, px - sign / 2); x <= std::min(W - 1, px + 1 + sign / 2); ++x)
                if (scene.bare_mask.at(y, x) != kClassRoad)
                    scene.bare_mask.at(y, x) = kClassPoleSign;
    }

    // snow threshold from the road-pixel order statistic
    std::vector<double> field(static_cast<std::size_t>(H) * W);
    std::vector<double> road_vals;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double v = detail::octave_noise(x, y, spec.snow_scale, 3, 0xA17, spec.seed);
            field[static_cast<std::size_t>(y) * W + x] = v;
            if (scene.bare_mask.at(y, x) == kClassRoad) road_vals.push_back(v);
        }
    const long n_road = static_cast<long>(road_vals.size());
    if (n_road == 0) throw GenerationError("scene '" + spec.id + "': road region is empty");
    const long target = std::lround(static_cast<double>(spec.coverage) * n_road);

    bool no_snow = target == 0;
    double tau = 0.0;
    if (!no_snow) {
        std::vector<double> sorted = road_vals;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        tau = sorted[static_cast<std::size_t>(target - 1)];
    }
    long covered = 0;
    if (!no_snow)
        for (double v : road_vals)
            if (v >= tau) ++covered;
    const double achieved = no_snow ? 0.0 : static_cast<double>(covered) / n_road;
    if (std::fabs(achieved - spec.coverage) > 0.02)
        throw GenerationError("scene '" + spec.id + "': snow field ties give coverage " +
                              std::to_string(achieved) + " vs target " +
                              std::to_string(spec.coverage) + "; change snow_scale");

    scene.truth_mask = scene.bare_mask;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::uint8_t lab = scene.bare_mask.at(y, x);
            const bool ground = lab == kClassRoad || lab == kClassBackground || lab == kClassGreen;
            if (!no_snow && ground && field[static_cast<std::size_t>(y) * W + x] >= tau)
                scene.truth_mask.at(y, x) = kClassSnow;
        }
    scene.shr_den = n_road;
    scene.shr_num = no_snow ? 0 : covered;

    // shading: class albedo, sky gradient, seeded per-class texture
    auto shade = [&](const MaskImage& mask, InputImage& img) {
        img = InputImage::blank(H, W, spec.id);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const int lab = mask.at(y, x);
                const ClassColor& base = kClassColors[static_cast<std::size_t>(lab)];
                double amp = 0.10;
                if (lab == kClassSky) amp = 0.04;
                if (lab == kClassSnow) amp = 0.03;
                const double tex =
                    1.0 + amp * (2.0 * detail::octave_noise(x, y, 7.0, 2,
                                                            0x51ull + static_cast<std::uint64_t>(lab),
                                                            spec.seed) -
                                 1.0);
                double grad = 1.0;
                if (lab == kClassSky)
                    grad = 0.88 + 0.24 * static_cast<double>(y) / std::max(1, horizon_y);
                const double rgb[3] = {base.r * tex * grad, base.g * tex * grad,
                                       base.b * tex * grad};
                for (int c = 0; c < 3; ++c)
                    img.at(y, x, c) = static_cast<std::uint8_t>(
                        std::clamp(static_cast<int>(std::lround(rgb[c] * 255.0)), 0, 255));
            }
    };
    shade(scene.bare_mask, scene.bare_image);
    shade(scene.truth_mask, scene.snow_image);
    scene.snow_image.id = spec.id;
    scene.bare_image.id = spec.id;
    return scene;
}

// ----------------------------------------------------- metadata sidecars

struct SceneMeta {
    std::string id;
    std::uint64_t seed = 0;
    double coverage = 0.0;
    long shr_num = 0;
    long shr_den = 0;
};

inline void write_scene_meta(const SynthScene& scene, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "id=" << scene.spec.id << "\n";
    out << "seed=" << scene.spec.seed << "\n";
    out << "coverage=" << scene.spec.coverage << "\n";
    out << "height=" << scene.spec.height << "\n";
    out << "width=" << scene.spec.width << "\n";
    out << "horizon=" << scene.spec.horizon << "\n";
    out << "road_near=" << scene.spec.road_near << "\n";
    out << "road_far=" << scene.spec.road_far << "\n";
    out << "road_offset=" << scene.spec.road_offset << "\n";
    out << "snow_scale=" << scene.spec.snow_scale << "\n";
    out << "pole_count=" << scene.spec.pole_count << "\n";
    out << "green_band=" << scene.spec.green_band << "\n";
    out << "truth_shr_num=" << scene.shr_num << "\n";
    out << "truth_shr_den=" << scene.shr_den << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline SceneMeta read_scene_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ParseError("'" + path + "': missing key '" + std::string(key) + "'");
        return it->second;
    };
    SceneMeta meta;
    meta.id = need("id");
    meta.seed = std::stoull(need("seed"));
    meta.coverage = std::stod(need("coverage"));
    meta.shr_num = std::stol(need("truth_shr_num"));
    meta.shr_den = std::stol(need("truth_shr_den"));
    return meta;
}

}  // namespace snowshr
