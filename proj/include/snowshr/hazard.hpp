#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "snowshr/checkpoint.hpp"
#include "snowshr/classes.hpp"
#include "snowshr/csv.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"
#include "snowshr/image_io.hpp"
#include "snowshr/resize.hpp"
#include "snowshr/segmenter.hpp"
#include "snowshr/translator.hpp"

// The hazard composition: translate the raw image to a bare-road fake,
// segment both, intersect road-of-fake with snow-of-raw, and report the
// covered fraction. Masks are brought back to the raw image resolution
// before intersecting.

namespace snowshr {

// --------------------------------------------------------- mask counting

inline long pix(const MaskImage& mask) {
    long count = 0;
    for (std::uint8_t v : mask.values) count += v != 0;
    return count;
}

inline MaskImage binarize(const MaskImage& mask, int class_index) {
    MaskImage out = MaskImage::filled(mask.height, mask.width, 0);
    for (std::size_t i = 0; i < mask.values.size(); ++i)
        out.values[i] = mask.values[i] == class_index ? 1 : 0;
    return out;
}

inline MaskImage intersect(const MaskImage& a, const MaskImage& b) {
    if (a.height != b.height || a.width != b.width)
        throw DimensionError("intersect: mask dims differ");
    MaskImage out = MaskImage::filled(a.height, a.width, 0);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        out.values[i] = a.values[i] != 0 && b.values[i] != 0 ? 1 : 0;
    return out;
}

// Exact rational snow hazard ratio.
struct ShrValue {
    long num = 0;  // pixels of road covered by snow
    long den = 0;  // pixels of road
    double ratio() const { return static_cast<double>(num) / static_cast<double>(den); }
    double percent() const { return 100.0 * ratio(); }
};

inline ShrValue shr(const MaskImage& rsl, const MaskImage& scl, const std::string& image_id = "") {
    if (rsl.height != scl.height || rsl.width != scl.width)
        throw DimensionError("shr: mask dims differ");
    ShrValue v;
    for (std::size_t i = 0; i < rsl.values.size(); ++i) {
        if (rsl.values[i] != 0) {
            ++v.den;
            if (scl.values[i] != 0) ++v.num;
        }
    }
    if (v.den == 0) throw NoRoadDetectedError(image_id);
    return v;
}

// ---------------------------------------------------------------- pipeline

// The two network applications the hazard math needs, behind one interface
// so truth-mask oracle stubs can stand in for trained checkpoints.
class Pipeline {
  public:
    virtual ~Pipeline() = default;
    // bare-road fake at the input image's resolution
    virtual InputImage translate_image(const InputImage& image) = 0;
    // class mask at the input image's resolution
    virtual MaskImage segment_image(const InputImage& image) = 0;
};

class NetworkPipeline : public Pipeline {
  public:
    NetworkPipeline(Translator translator, Segmenter segmenter)
        : translator_(std::move(translator)), segmenter_(std::move(segmenter)) {}

    InputImage translate_image(const InputImage& image) override {
        const TranslatorConfig& cfg = translator_.config();
        const InputImage sized = resize_bilinear(image, cfg.input_height, cfg.input_width);
        const InputImage fake = translator_.translate(sized);
        return resize_bilinear(fake, image.height, image.width);
    }

    MaskImage segment_image(const InputImage& image) override {
        const int s = segmenter_.config().input_size;
        const MaskImage mask = segmenter_.segment(resize_bilinear(image, s, s));
        return resize_nearest(mask, image.height, image.width);
    }

    const Translator& translator() const { return translator_; }
    const Segmenter& segmenter() const { return segmenter_; }

  private:
    Translator translator_;
    Segmenter segmenter_;
};

// Reads ground truth straight from a synthetic dataset directory:
// translation returns the stored bare image, segmentation matches the input
// against the stored snow/bare renders and returns the corresponding truth
// mask. With these stubs the reported SHR equals the sidecar truth exactly.
class OraclePipeline : public Pipeline {
  public:
    explicit OraclePipeline(std::string dataset_dir) : dir_(std::move(dataset_dir)) {}

    InputImage translate_image(const InputImage& image) override {
        InputImage bare = load_image(scene_path(image.id, "_bare.ppm"));
        bare.id = image.id;
        if (bare.height != image.height || bare.width != image.width)
            bare = resize_bilinear(bare, image.height, image.width);
        return bare;
    }

    MaskImage segment_image(const InputImage& image) override {
        const std::string id = scene_id(image.id);
        const InputImage snow = load_image(scene_path(image.id, "_snow.ppm"));
        const InputImage bare = load_image(scene_path(image.id, "_bare.ppm"));
        const bool is_snow = mean_abs_diff(image, snow) <= mean_abs_diff(image, bare);
        MaskImage mask = is_snow ? load_mask((std::filesystem::path(dir_) / (id + "_mask.pgm")).string())
                                 : load_mask((std::filesystem::path(dir_) / (id + "_bare_mask.pgm")).string());
        if (mask.height != image.height || mask.width != image.width)
            mask = resize_nearest(mask, image.height, image.width);
        return mask;
    }

  private:
    static std::string scene_id(const std::string& image_id) {
        const std::string suffix = "_snow";
        if (image_id.size() > suffix.size() &&
            image_id.compare(image_id.size() - suffix.size(), suffix.size(), suffix) == 0)
            return image_id.substr(0, image_id.size() - suffix.size());
        return image_id;
    }

    std::string scene_path(const std::string& image_id, const char* suffix) const {
        return (std::filesystem::path(dir_) / (scene_id(image_id) + suffix)).string();
    }

    static double mean_abs_diff(const InputImage& a, const InputImage& b) {
        if (a.height != b.height || a.width != b.width) return 1e30;
        double acc = 0.0;
        for (std::size_t i = 0; i < a.rgb.size(); ++i)
            acc += std::fabs(static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]));
        return acc / static_cast<double>(a.rgb.size());
    }

    std::string dir_;
};

// ------------------------------------------------------- oracle stub files

inline constexpr const char* kOracleMarker = "__oracle__/role";
inline constexpr float kOracleRoleTranslator = 1.0f;
inline constexpr float kOracleRoleSegmenter = 2.0f;

inline void write_oracle_stub_checkpoint(const std::string& path, float role) {
    ParamSet params;
    params.add(kOracleMarker, Tensor::scalar_of(role));
    save_checkpoint(params, path);
}

inline bool is_oracle_stub(const Checkpoint& ckpt) { return ckpt.params.contains(kOracleMarker); }

// --------------------------------------------------------- hazard reports

struct HazardReport {
    std::string image_id;
    long pix_road = 0;
    long pix_snow_over_road = 0;
    ShrValue shr_value;
    MaskImage intersection_mask;
};

// RsL: road pixels of the segmented translation.
inline MaskImage road_surface_label(Pipeline& pipeline, const InputImage& image) {
    return binarize(pipeline.segment_image(pipeline.translate_image(image)), kClassRoad);
}

// ScL: snow pixels of the segmented raw image.
inline MaskImage snow_label(Pipeline& pipeline, const InputImage& image) {
    return binarize(pipeline.segment_image(image), kClassSnow);
}

inline HazardReport compute_report(Pipeline& pipeline, const InputImage& image) {
    const MaskImage rsl = road_surface_label(pipeline, image);
    const MaskImage scl = snow_label(pipeline, image);
    HazardReport report;
    report.image_id = image.id;
    report.intersection_mask = intersect(rsl, scl);
    report.shr_value = shr(rsl, scl, image.id);
    report.pix_road = report.shr_value.den;
    report.pix_snow_over_road = report.shr_value.num;
    return report;
}

inline CsvTable hazard_report_table(const std::vector<HazardReport>& reports) {
    CsvTable table;
    table.header = {"image_id", "pix_road", "pix_snow_over_road", "shr_percent"};
    for (const HazardReport& r : reports)
        table.rows.push_back({r.image_id, std::to_string(r.pix_road),
                              std::to_string(r.pix_snow_over_road),
                              format_fixed(r.shr_value.percent(), 2)});
    return table;
}

struct HazardFailure {
    std::string image_id;
    std::string reason;
};

inline CsvTable hazard_failures_table(const std::vector<HazardFailure>& failures) {
    CsvTable table;
    table.header = {"image_id", "reason"};
    for (const HazardFailure& f : failures) table.rows.push_back({f.image_id, f.reason});
    return table;
}

}  // namespace snowshr
