#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "snowshr/snowshr.hpp"

namespace fs = std::filesystem;
using namespace snowshr;

namespace {

void parse_size(const std::string& text, int& h, int& w) {
    const std::size_t x = text.find_first_of("xX");
    if (x == std::string::npos || x == 0 || x + 1 == text.size())
        throw ConfigError("--size expects HxW, got '" + text + "'");
    try {
        h = std::stoi(text.substr(0, x));
        w = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        throw ConfigError("--size expects HxW, got '" + text + "'");
    }
    if (h < 1 || w < 1) throw ConfigError("--size dimensions must be positive");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::vector<std::string> list_images(const std::string& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() == ext && p.stem().string().rfind("montage_", 0) != 0)
            paths.push_back(p.string());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Flat key=value config files, applied to any long option the command line
// left at its default. Keys use the option name without the leading dashes.
void apply_config_file(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    const auto trim = [](const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                             ": expected key=value");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key == "config")
            throw ConfigError("'" + path + "': config files cannot nest");
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw ConfigError("'" + path + "' line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

// Coverage flag grammar: "" picks per-scene random coverage, "P" fixes it,
// "A:B:STEP" sweeps the closed interval.
std::vector<double> parse_coverage(const std::string& text) {
    if (text.empty()) return {};
    std::vector<double> points;
    const std::size_t c1 = text.find(':');
    try {
        if (c1 == std::string::npos) {
            points.push_back(std::stod(text));
        } else {
            const std::size_t c2 = text.find(':', c1 + 1);
            if (c2 == std::string::npos) throw ConfigError("--coverage sweep expects A:B:STEP");
            const double a = std::stod(text.substr(0, c1));
            const double b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
            const double step = std::stod(text.substr(c2 + 1));
            if (step <= 0.0 || b < a) throw ConfigError("--coverage sweep expects A <= B, STEP > 0");
            for (double v = a; v <= b + 1e-9; v += step)
                points.push_back(std::round(v * 1e9) / 1e9);
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError("--coverage expects a number or A:B:STEP, got '" + text + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("--coverage value out of range: '" + text + "'");
    }
    for (double p : points)
        if (p < 0.0 || p > 1.0) throw ConfigError("--coverage values must lie in [0, 1]");
    return points;
}

struct SynthArgs {
    std::string config;
    std::string out;
    std::string size = "96x96";
    std::string coverage;
    int count = 0;
    std::uint64_t seed = 1;
    bool montage = false;
};

int run_synth(const SynthArgs& args) {
    int h = 0, w = 0;
    parse_size(args.size, h, w);
    const std::vector<double> points = parse_coverage(args.coverage);
    int count = args.count;
    if (count <= 0) {
        if (points.size() > 1)
            count = static_cast<int>(points.size());
        else
            throw ConfigError("--count is required unless --coverage gives a sweep");
    }
    ensure_dir(args.out);

    RunManifest manifest;
    manifest.command = "synth";
    manifest.seed = args.seed;
    manifest.add_config("count", std::to_string(count));
    manifest.add_config("size", std::to_string(h) + "x" + std::to_string(w));
    manifest.add_config("coverage", args.coverage.empty() ? "random" : args.coverage);
    manifest.outputs.push_back(args.out);

    std::vector<InputImage> snow_cells, bare_cells;
    for (int i = 0; i < count; ++i) {
        SceneSpec spec;
        spec.height = h;
        spec.width = w;
        spec.seed = detail::mix64(args.seed ^ detail::mix64(static_cast<std::uint64_t>(i) + 1));
        char id[32];
        std::snprintf(id, sizeof id, "scene_%04d", i);
        spec.id = id;

        Rng geo(spec.seed ^ 0x67656f6d65747279ull);
        spec.horizon = geo.uniformf(0.25f, 0.45f);
        spec.road_near = geo.uniformf(0.55f, 0.95f);
        spec.road_far = geo.uniformf(0.04f, 0.16f);
        const float margin = std::min(0.12f, 0.5f - spec.road_near / 2.0f);
        spec.road_offset = geo.uniformf(-margin, margin);
        spec.pole_count = geo.uniform_int(0, 3);
        spec.green_band = geo.uniformf(0.05f, 0.18f);
        spec.snow_scale = static_cast<float>(geo.uniform_int(6, 12));
        if (points.empty())
            spec.coverage = geo.uniformf(0.05f, 0.95f);
        else
            spec.coverage = static_cast<float>(points[i % points.size()]);

        const SynthScene scene = synth_scene(spec);
        const std::string base = args.out + "/" + spec.id;
        save_image(scene.snow_image, base + "_snow.ppm");
        save_image(scene.bare_image, base + "_bare.ppm");
        save_mask(scene.truth_mask, base + "_mask.pgm");
        save_mask(scene.bare_mask, base + "_bare_mask.pgm");
        write_scene_meta(scene, base + ".meta");
        if (args.montage && snow_cells.size() < 16) {
            snow_cells.push_back(scene.snow_image);
            bare_cells.push_back(scene.bare_image);
        }
    }
    if (args.montage) {
        save_image(montage_4x4(snow_cells, h, w, "montage_snow"), args.out + "/montage_snow.ppm");
        save_image(montage_4x4(bare_cells, h, w, "montage_bare"), args.out + "/montage_bare.ppm");
    }
    manifest.write(args.out + "/manifest.txt");
    std::fprintf(stderr, "wrote %d scenes to %s\n", count, args.out.c_str());
    return 0;
}

struct TrainTranslatorArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string size = "64x96";
    std::uint64_t seed = 1;
    int epochs = 30;
    int batch = 1;
    double lr = 2e-4;
    double lambda_l1 = 100.0;
};

std::vector<PairedSample> load_pairs(const std::string& dir, int h, int w) {
    std::vector<PairedSample> pairs;
    for (const std::string& path : list_images(dir, ".ppm")) {
        const std::string stem = stem_of(path);
        if (!ends_with(stem, "_snow")) continue;
        const std::string id = stem.substr(0, stem.size() - 5);
        const std::string bare_path = dir + "/" + id + "_bare.ppm";
        if (!fs::exists(bare_path))
            throw InputError("missing bare counterpart for '" + path + "'");
        PairedSample p;
        p.id = id;
        p.snow_image = resize_bilinear(load_image(path), h, w);
        p.bare_image = resize_bilinear(load_image(bare_path), h, w);
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) throw InputError("no *_snow.ppm images in '" + dir + "'");
    return pairs;
}

int run_train_translator(const TrainTranslatorArgs& args) {
    int h = 0, w = 0;
    parse_size(args.size, h, w);
    TranslatorConfig cfg;
    cfg.input_height = h;
    cfg.input_width = w;
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch;
    cfg.lr = static_cast<float>(args.lr);
    cfg.lambda_l1 = static_cast<float>(args.lambda_l1);
    cfg.validate();

    const std::vector<PairedSample> pairs = load_pairs(args.data, h, w);
    ensure_dir(args.out);

    TranslatorTrainer trainer(pairs, cfg, args.seed);
    std::vector<TranslatorEpochRecord> history;
    for (int e = 0; e < cfg.epochs; ++e) {
        history.push_back(trainer.run_epoch());
        const TranslatorEpochRecord& r = history.back();
        std::fprintf(stderr, "epoch %d/%d d_loss=%.4f g_adv=%.4f g_l1=%.4f\n", r.epoch,
                     cfg.epochs, r.d_loss, r.g_adv, r.g_l1);
    }

    const std::string ckpt = args.out + "/translator.ckpt";
    save_translator(trainer.model(), ckpt);
    write_csv(loss_history_table(history), args.out + "/loss_history.csv");

    RunManifest manifest;
    manifest.command = "train-translator";
    manifest.seed = args.seed;
    manifest.add_config("size", args.size);
    manifest.add_config("epochs", std::to_string(cfg.epochs));
    manifest.add_config("batch", std::to_string(cfg.batch_size));
    manifest.add_config("lr", format_fixed(args.lr, 6));
    manifest.add_config("lambda-l1", format_fixed(args.lambda_l1, 2));
    manifest.add_config("pairs", std::to_string(pairs.size()));
    manifest.inputs.push_back(args.data);
    manifest.outputs.push_back(ckpt);
    manifest.outputs.push_back(args.out + "/loss_history.csv");
    manifest.write(args.out + "/manifest.txt");
    return 0;
}

struct TrainSegmenterArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string size = "96x96";
    std::uint64_t seed = 1;
    int epochs = 30;
    int batch = 16;
    double lr = 1e-3;
};

// Every *.ppm in the directory trains the segmenter; the mask file for
// "<id>_snow.ppm" is "<id>_mask.pgm", for "<id>_bare.ppm" it is
// "<id>_bare_mask.pgm", and for any other stem "<stem>_mask.pgm".
std::string mask_path_for(const std::string& dir, const std::string& stem) {
    if (ends_with(stem, "_snow"))
        return dir + "/" + stem.substr(0, stem.size() - 5) + "_mask.pgm";
    return dir + "/" + stem + "_mask.pgm";
}

std::vector<AnnotatedSample> load_annotated(const std::string& dir, int size) {
    std::vector<AnnotatedSample> samples;
    for (const std::string& path : list_images(dir, ".ppm")) {
        const std::string stem = stem_of(path);
        const std::string mask_path = mask_path_for(dir, stem);
        if (!fs::exists(mask_path)) throw InputError("missing mask '" + mask_path + "'");
        AnnotatedSample s;
        s.id = stem;
        s.image = resize_bilinear(load_image(path), size, size);
        s.mask = resize_nearest(load_mask(mask_path), size, size);
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw InputError("no *.ppm images in '" + dir + "'");
    return samples;
}

std::string scene_of(const std::string& sample_id) {
    for (const char* suffix : {"_snow", "_bare"})
        if (ends_with(sample_id, suffix))
            return sample_id.substr(0, sample_id.size() - std::strlen(suffix));
    return sample_id;
}

int run_train_segmenter(const TrainSegmenterArgs& args) {
    int h = 0, w = 0;
    parse_size(args.size, h, w);
    if (h != w) throw ConfigError("segmenter input must be square, got " + args.size);
    SegmenterConfig cfg;
    cfg.input_size = h;
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch;
    cfg.lr = static_cast<float>(args.lr);
    cfg.validate();

    std::vector<AnnotatedSample> samples = load_annotated(args.data, cfg.input_size);
    ensure_dir(args.out);

    // Hold out ~10% of scenes for the per-epoch val_miou column; both views
    // of a scene stay on the same side of the split.
    std::vector<std::string> scenes;
    for (const AnnotatedSample& s : samples) {
        const std::string sc = scene_of(s.id);
        if (std::find(scenes.begin(), scenes.end(), sc) == scenes.end()) scenes.push_back(sc);
    }
    std::vector<AnnotatedSample> train, val;
    if (scenes.size() >= 2) {
        const Split split = split_ids(scenes, {0.9, args.seed});
        for (AnnotatedSample& s : samples) {
            const std::string sc = scene_of(s.id);
            const bool in_train =
                std::find(split.train.begin(), split.train.end(), sc) != split.train.end();
            (in_train ? train : val).push_back(std::move(s));
        }
    } else {
        train = std::move(samples);
    }

    SegmenterTrainer trainer(train, cfg, args.seed);
    std::vector<SegmenterEpochRecord> history;
    for (int e = 0; e < cfg.epochs; ++e) {
        SegmenterEpochRecord rec;
        rec.loss = trainer.run_epoch();
        rec.epoch = trainer.epoch();
        rec.val_miou = val.empty() ? 0.0 : trainer.evaluate_miou(val);
        history.push_back(rec);
        std::fprintf(stderr, "epoch %d/%d loss=%.4f val_miou=%.4f\n", rec.epoch, cfg.epochs,
                     rec.loss, rec.val_miou);
    }

    const std::string ckpt = args.out + "/segmenter.ckpt";
    save_segmenter(trainer.model(), ckpt);
    write_csv(metric_history_table(history), args.out + "/metric_history.csv");

    RunManifest manifest;
    manifest.command = "train-segmenter";
    manifest.seed = args.seed;
    manifest.add_config("size", args.size);
    manifest.add_config("epochs", std::to_string(cfg.epochs));
    manifest.add_config("batch", std::to_string(cfg.batch_size));
    manifest.add_config("lr", format_fixed(args.lr, 6));
    manifest.add_config("train_samples", std::to_string(train.size()));
    manifest.add_config("val_samples", std::to_string(val.size()));
    manifest.inputs.push_back(args.data);
    manifest.outputs.push_back(ckpt);
    manifest.outputs.push_back(args.out + "/metric_history.csv");
    manifest.write(args.out + "/manifest.txt");
    return 0;
}

struct ComputeShrArgs {
    std::string config;
    std::string translator_ckpt;
    std::string segmenter_ckpt;
    std::string image_dir;
    std::string out;
    bool montage = false;
};

int run_compute_shr(const ComputeShrArgs& args) {
    std::vector<std::string> paths = list_images(args.image_dir, ".ppm");
    const bool any_snow = std::any_of(paths.begin(), paths.end(), [](const std::string& p) {
        return ends_with(stem_of(p), "_snow");
    });
    if (any_snow) {
        paths.erase(std::remove_if(paths.begin(), paths.end(),
                                   [](const std::string& p) {
                                       return !ends_with(stem_of(p), "_snow");
                                   }),
                    paths.end());
    }

    const Checkpoint t_ckpt = load_checkpoint(args.translator_ckpt);
    const Checkpoint s_ckpt = load_checkpoint(args.segmenter_ckpt);
    const bool t_stub = is_oracle_stub(t_ckpt), s_stub = is_oracle_stub(s_ckpt);
    if (t_stub != s_stub)
        throw ConfigError("oracle stubs must be given for both checkpoints or neither");
    std::unique_ptr<Pipeline> pipeline;
    if (t_stub) {
        pipeline = std::make_unique<OraclePipeline>(args.image_dir);
    } else {
        pipeline = std::make_unique<NetworkPipeline>(load_translator(args.translator_ckpt),
                                                     load_segmenter(args.segmenter_ckpt));
    }

    ensure_dir(args.out);
    if (paths.empty()) std::fprintf(stderr, "warning: no .ppm images in %s\n", args.image_dir.c_str());

    std::vector<HazardReport> reports;
    std::vector<HazardFailure> failures;
    std::vector<InputImage> in_cells, fake_cells, label_cells;
    int cell_h = 96, cell_w = 96;
    for (const std::string& path : paths) {
        const InputImage image = load_image(path);
        try {
            HazardReport report = compute_report(*pipeline, image);
            save_mask(report.intersection_mask, args.out + "/" + image.id + "_roi.pgm");
            reports.push_back(std::move(report));
        } catch (const NoRoadDetectedError&) {
            failures.push_back({image.id, "no road detected"});
        } catch (const Error& e) {
            failures.push_back({image.id, e.what()});
        }
        if (args.montage && in_cells.size() < 16) {
            cell_h = image.height;
            cell_w = image.width;
            in_cells.push_back(image);
            fake_cells.push_back(pipeline->translate_image(image));
            label_cells.push_back(colorize_mask(pipeline->segment_image(image), image.id));
        }
    }

    write_csv(hazard_report_table(reports), args.out + "/shr_report.csv");
    write_csv(hazard_failures_table(failures), args.out + "/shr_failures.csv");
    if (args.montage && !in_cells.empty()) {
        save_image(montage_4x4(in_cells, cell_h, cell_w, "montage_inputs"),
                   args.out + "/montage_inputs.ppm");
        save_image(montage_4x4(fake_cells, cell_h, cell_w, "montage_translated"),
                   args.out + "/montage_translated.ppm");
        save_image(montage_4x4(label_cells, cell_h, cell_w, "montage_labels"),
                   args.out + "/montage_labels.ppm");
    }

    RunManifest manifest;
    manifest.command = "compute-shr";
    manifest.add_config("images", std::to_string(paths.size()));
    manifest.add_config("failures", std::to_string(failures.size()));
    manifest.add_config("pipeline", t_stub ? "oracle" : "network");
    manifest.inputs = {args.translator_ckpt, args.segmenter_ckpt, args.image_dir};
    manifest.outputs = {args.out + "/shr_report.csv", args.out + "/shr_failures.csv"};
    manifest.write(args.out + "/manifest.txt");

    for (const HazardFailure& f : failures)
        std::fprintf(stderr, "failed: %s (%s)\n", f.image_id.c_str(), f.reason.c_str());
    return failures.empty() ? 0 : 1;
}

struct ReportArgs {
    std::string config;
    std::string csv;
    std::string out;
};

std::size_t column_index(const CsvTable& table, const std::string& name) {
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == name) return i;
    throw ParseError("report CSV is missing column '" + name + "' (line 1)");
}

int run_report(const ReportArgs& args) {
    const CsvTable table = read_csv(args.csv);
    const std::size_t id_col = column_index(table, "image_id");
    const std::size_t pix_col = column_index(table, "pix_snow_over_road");
    const std::size_t shr_col = column_index(table, "shr_percent");

    BarChart pix_chart, shr_chart;
    pix_chart.title = "Dangerous ROI pixel count";
    pix_chart.y_label = "pixels";
    shr_chart.title = "Snow hazard ratio";
    shr_chart.y_label = "percent";
    shr_chart.units_per_value = 1.0;
    std::vector<double> shr_values;
    double pix_max = 0.0;
    for (const auto& row : table.rows) {
        const double pix = parse_double(row[pix_col], "column pix_snow_over_road");
        const double shr = parse_double(row[shr_col], "column shr_percent");
        pix_chart.bars.emplace_back(row[id_col], pix);
        shr_chart.bars.emplace_back(row[id_col], shr);
        shr_values.push_back(shr);
        pix_max = std::max(pix_max, pix);
    }
    if (table.rows.empty()) throw InputError("report CSV has no data rows");
    pix_chart.units_per_value = pix_max > 0.0 ? 200.0 / pix_max : 1.0;

    ensure_dir(args.out);
    write_bar_chart_svg(pix_chart, args.out + "/pixel_counts.svg");
    write_bar_chart_svg(shr_chart, args.out + "/shr_percent.svg");

    std::sort(shr_values.begin(), shr_values.end());
    const std::size_t n = shr_values.size();
    const double median =
        n % 2 ? shr_values[n / 2] : (shr_values[n / 2 - 1] + shr_values[n / 2]) / 2.0;
    std::ofstream summary(args.out + "/summary.txt", std::ios::trunc);
    if (!summary) throw IoError("cannot open summary.txt for writing");
    summary << "images=" << n << "\n";
    summary << "shr_min=" << format_fixed(shr_values.front(), 2) << "\n";
    summary << "shr_median=" << format_fixed(median, 2) << "\n";
    summary << "shr_max=" << format_fixed(shr_values.back(), 2) << "\n";

    RunManifest manifest;
    manifest.command = "report";
    manifest.add_config("rows", std::to_string(n));
    manifest.inputs.push_back(args.csv);
    manifest.outputs = {args.out + "/pixel_counts.svg", args.out + "/shr_percent.svg",
                        args.out + "/summary.txt"};
    manifest.write(args.out + "/manifest.txt");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"snow hazard ratio pipeline: synthetic scenes, image translation, "
                 "segmentation, and SHR reporting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    int rc = 0;

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
    synth->add_option("--out", synth_args.out, "output directory")->required();
    synth->add_option("--count", synth_args.count, "number of scenes");
    synth->add_option("--seed", synth_args.seed, "master seed");
    synth->add_option("--size", synth_args.size, "scene size HxW (default 96x96)");
    synth->add_option("--coverage", synth_args.coverage,
                      "snow coverage: fixed P, sweep A:B:STEP, or random if omitted");
    synth->add_flag("--montage", synth_args.montage, "write 4x4 montages");
    synth->add_option("--config", synth_args.config, "flat key=value config file");
    synth->callback([&] {
        apply_config_file(synth, synth_args.config);
        rc = run_synth(synth_args);
    });

    TrainTranslatorArgs tt_args;
    CLI::App* tt = app.add_subcommand("train-translator", "train the snow-to-bare translator");
    tt->add_option("data", tt_args.data, "dataset directory (from synth)")->required();
    tt->add_option("--out", tt_args.out, "output directory")->required();
    tt->add_option("--seed", tt_args.seed, "training seed");
    tt->add_option("--size", tt_args.size, "network input HxW (default 64x96)");
    tt->add_option("--epochs", tt_args.epochs, "training epochs");
    tt->add_option("--batch", tt_args.batch, "batch size");
    tt->add_option("--lr", tt_args.lr, "learning rate");
    tt->add_option("--lambda-l1", tt_args.lambda_l1, "L1 reconstruction weight");
    tt->add_option("--config", tt_args.config, "flat key=value config file");
    tt->callback([&] {
        apply_config_file(tt, tt_args.config);
        rc = run_train_translator(tt_args);
    });

    TrainSegmenterArgs ts_args;
    CLI::App* ts = app.add_subcommand("train-segmenter", "train the semantic segmenter");
    ts->add_option("data", ts_args.data, "dataset directory (from synth)")->required();
    ts->add_option("--out", ts_args.out, "output directory")->required();
    ts->add_option("--seed", ts_args.seed, "training seed");
    ts->add_option("--size", ts_args.size, "square network input HxW (default 96x96)");
    ts->add_option("--epochs", ts_args.epochs, "training epochs");
    ts->add_option("--batch", ts_args.batch, "batch size");
    ts->add_option("--lr", ts_args.lr, "learning rate");
    ts->add_option("--config", ts_args.config, "flat key=value config file");
    ts->callback([&] {
        apply_config_file(ts, ts_args.config);
        rc = run_train_segmenter(ts_args);
    });

    ComputeShrArgs cs_args;
    CLI::App* cs = app.add_subcommand("compute-shr", "compute snow hazard ratios for a directory");
    cs->add_option("translator", cs_args.translator_ckpt, "translator checkpoint")->required();
    cs->add_option("segmenter", cs_args.segmenter_ckpt, "segmenter checkpoint")->required();
    cs->add_option("images", cs_args.image_dir, "image directory")->required();
    cs->add_option("--out", cs_args.out, "output directory")->required();
    cs->add_flag("--montage", cs_args.montage, "write input/translated/label montages");
    cs->add_option("--config", cs_args.config, "flat key=value config file");
    cs->callback([&] {
        apply_config_file(cs, cs_args.config);
        rc = run_compute_shr(cs_args);
    });

    ReportArgs rp_args;
    CLI::App* rp = app.add_subcommand("report", "render charts and a summary from a SHR report");
    rp->add_option("csv", rp_args.csv, "shr_report.csv path")->required();
    rp->add_option("--out", rp_args.out, "output directory")->required();
    rp->add_option("--config", rp_args.config, "flat key=value config file");
    rp->callback([&] {
        apply_config_file(rp, rp_args.config);
        rc = run_report(rp_args);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return rc;
}
