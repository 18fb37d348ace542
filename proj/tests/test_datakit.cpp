#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "oracles.hpp"
#include "snowshr/charts.hpp"
#include "snowshr/checkpoint.hpp"
#include "snowshr/csv.hpp"
#include "snowshr/image_io.hpp"
#include "snowshr/layers.hpp"
#include "snowshr/manifest.hpp"
#include "snowshr/montage.hpp"
#include "snowshr/resize.hpp"
#include "snowshr/rng.hpp"
#include "snowshr/split.hpp"
#include "snowshr/synth.hpp"
#include "snowshr/tiling.hpp"

using namespace snowshr;
namespace fs = std::filesystem;

namespace {

std::string temp_dir() {
    static int counter = 0;
    const std::string dir =
        (fs::temp_directory_path() / ("snowshr_test_" + std::to_string(::getpid()) + "_" +
                                      std::to_string(counter++)))
            .string();
    fs::create_directories(dir);
    return dir;
}

InputImage random_image(int h, int w, Rng& rng, const std::string& id) {
    InputImage im = InputImage::blank(h, w, id);
    for (auto& b : im.rgb) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return im;
}

MaskImage random_mask(int h, int w, Rng& rng, int num_classes = kNumClasses) {
    MaskImage m = MaskImage::filled(h, w, 0);
    for (auto& v : m.values) v = static_cast<std::uint8_t>(rng.uniform_int(0, num_classes - 1));
    return m;
}

}  // namespace

TEST_CASE("ppm round trip is bit exact") {
    const std::string dir = temp_dir();
    Rng rng(301);
    const InputImage img = random_image(17, 23, rng, "roundtrip");
    const std::string p1 = dir + "/a.ppm", p2 = dir + "/b.ppm";
    save_image(img, p1);
    const InputImage back = load_image(p1);
    CHECK(back.id == "a");
    CHECK(back.height == 17);
    CHECK(back.width == 23);
    CHECK(back.rgb == img.rgb);
    save_image(back, p2);
    CHECK(file_fingerprint(p1) == file_fingerprint(p2));
}

TEST_CASE("pgm round trip preserves mask labels") {
    const std::string dir = temp_dir();
    Rng rng(302);
    const MaskImage mask = random_mask(9, 14, rng);
    save_mask(mask, dir + "/m.pgm");
    const MaskImage back = load_mask(dir + "/m.pgm");
    CHECK(back.values == mask.values);
}

TEST_CASE("image loading rejects malformed files") {
    const std::string dir = temp_dir();
    {
        std::ofstream f(dir + "/bad_magic.ppm", std::ios::binary);
        f << "P4\n2 2\n255\n....";
    }
    CHECK_THROWS_AS(load_image(dir + "/bad_magic.ppm"), FormatError);
    {
        std::ofstream f(dir + "/trunc.ppm", std::ios::binary);
        f << "P6\n4 4\n255\nab";
    }
    CHECK_THROWS_AS(load_image(dir + "/trunc.ppm"), FormatError);
    {
        std::ofstream f(dir + "/maxval.ppm", std::ios::binary);
        f << "P6\n1 1\n65535\nabcdef";
    }
    CHECK_THROWS_AS(load_image(dir + "/maxval.ppm"), FormatError);
    CHECK_THROWS_AS(load_image(dir + "/missing.ppm"), IoError);

    // mask labels out of range surface as label errors
    {
        std::ofstream f(dir + "/badlabel.pgm", std::ios::binary);
        f << "P5\n1 1\n255\n";
        f.put(static_cast<char>(200));
    }
    CHECK_THROWS_AS(load_mask(dir + "/badlabel.pgm"), LabelError);
}

TEST_CASE("bilinear resize matches the frozen half-pixel fixture") {
    InputImage src = InputImage::blank(2, 2, "fix");
    const std::uint8_t vals[] = {10, 200, 90, 40};
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            for (int c = 0; c < 3; ++c) src.at(y, x, c) = vals[y * 2 + x];

    const InputImage up = resize_bilinear(src, 4, 4);
    const std::uint8_t want[4][4] = {
        {10, 58, 153, 200}, {30, 63, 128, 160}, {70, 73, 78, 80}, {90, 78, 53, 40}};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) {
                INFO("pixel " << y << "," << x);
                REQUIRE(static_cast<int>(up.at(y, x, c)) == want[y][x]);
            }
}

TEST_CASE("resize to identical dims is an exact copy") {
    Rng rng(303);
    const InputImage img = random_image(13, 19, rng, "same");
    const InputImage same = resize_bilinear(img, 13, 19);
    CHECK(same.rgb == img.rgb);
}

TEST_CASE("resize preserves constant images") {
    InputImage img = InputImage::blank(8, 8, "c");
    for (auto& b : img.rgb) b = 77;
    const InputImage up = resize_bilinear(img, 21, 13);
    for (auto b : up.rgb) REQUIRE(b == 77);
}

TEST_CASE("nearest mask resize matches the frozen fixture") {
    MaskImage m = MaskImage::filled(2, 2, 0);
    m.values = {0, 1, 2, 3};
    const MaskImage up = resize_nearest(m, 3, 3);
    CHECK(up.values == std::vector<std::uint8_t>{0, 1, 1, 2, 3, 3, 2, 3, 3});
}

TEST_CASE("tiling partitions a 598x1196 frame into 8 crops of 299") {
    Rng rng(304);
    const InputImage frame = random_image(598, 1196, rng, "frame");
    const std::vector<InputImage> crops = tile_crops(frame, 2, 4, 299);
    REQUIRE(crops.size() == 8);
    for (const InputImage& c : crops) {
        CHECK(c.height == 299);
        CHECK(c.width == 299);
    }
    CHECK(crops[0].id == "frame_r0c0");
    CHECK(crops[7].id == "frame_r1c3");

    const InputImage back = reassemble(crops, 2, 4, "frame");
    CHECK(back.height == 598);
    CHECK(back.width == 1196);
    CHECK(back.rgb == frame.rgb);

    CHECK_THROWS_AS(tile_crops(random_image(100, 100, rng, "small"), 2, 4, 299),
                    DimensionError);
}

TEST_CASE("mask tiling mirrors image tiling") {
    Rng rng(305);
    const MaskImage mask = random_mask(64, 96, rng);
    const std::vector<MaskImage> crops = tile_crops(mask, 2, 3, 32);
    REQUIRE(crops.size() == 6);
    const MaskImage back = reassemble(crops, 2, 3);
    CHECK(back.values == mask.values);
}

TEST_CASE("split uses round-half-up sizes and partitions the ids") {
    std::vector<std::string> ids;
    for (int i = 0; i < 1155; ++i) ids.push_back("img_" + std::to_string(i));
    const Split split = split_ids(ids, {0.9, 77});
    CHECK(split.train.size() == 1040);
    CHECK(split.test.size() == 115);

    std::set<std::string> all(split.train.begin(), split.train.end());
    for (const auto& id : split.test) REQUIRE(all.insert(id).second);
    CHECK(all.size() == ids.size());

    const Split again = split_ids(ids, {0.9, 77});
    CHECK(again.train == split.train);
    const Split other = split_ids(ids, {0.9, 78});
    CHECK(other.train != split.train);

    CHECK_THROWS_AS(split_ids(std::vector<std::string>{}, {0.9, 1}), InputError);
    CHECK_THROWS_AS(split_ids(ids, {1.0, 1}), ConfigError);
    CHECK_THROWS_AS(split_ids(ids, {0.0, 1}), ConfigError);
}

TEST_CASE("synth scenes are deterministic per seed") {
    SceneSpec spec;
    spec.seed = 9090;
    const SynthScene a = synth_scene(spec);
    const SynthScene b = synth_scene(spec);
    CHECK(a.snow_image.rgb == b.snow_image.rgb);
    CHECK(a.bare_image.rgb == b.bare_image.rgb);
    CHECK(a.truth_mask.values == b.truth_mask.values);
    CHECK(a.shr_num == b.shr_num);

    spec.seed = 9091;
    const SynthScene c = synth_scene(spec);
    CHECK(a.snow_image.rgb != c.snow_image.rgb);
}

TEST_CASE("zero coverage leaves the scene bare") {
    SceneSpec spec;
    spec.coverage = 0.0f;
    spec.seed = 11;
    const SynthScene scene = synth_scene(spec);
    CHECK(scene.snow_image.rgb == scene.bare_image.rgb);
    CHECK(scene.truth_mask.values == scene.bare_mask.values);
    CHECK(scene.shr_num == 0);
    CHECK(scene.shr_den > 0);
}

TEST_CASE("full coverage blankets the road") {
    SceneSpec spec;
    spec.coverage = 1.0f;
    spec.seed = 12;
    const SynthScene scene = synth_scene(spec);
    CHECK(scene.shr_num == scene.shr_den);
    // every bare-road pixel turned to snow in the truth mask
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            if (scene.bare_mask.at(y, x) == kClassRoad)
                REQUIRE(scene.truth_mask.at(y, x) == kClassSnow);
}

TEST_CASE("half coverage lands within the documented tolerance") {
    for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
        SceneSpec spec;
        spec.coverage = 0.5f;
        spec.seed = seed;
        const SynthScene scene = synth_scene(spec);
        // brute-force recount from the emitted masks
        long long num = 0, den = 0;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const bool road = scene.bare_mask.at(y, x) == kClassRoad;
                const bool snow = scene.truth_mask.at(y, x) == kClassSnow;
                if (road) ++den;
                if (road && snow) ++num;
            }
        REQUIRE(den > 0);
        const double shr = static_cast<double>(num) / static_cast<double>(den);
        CHECK(shr >= 0.48);
        CHECK(shr <= 0.52);
        CHECK(num == scene.shr_num);
        CHECK(den == scene.shr_den);
    }
}

TEST_CASE("snow and bare images differ only where the truth mask says snow") {
    SceneSpec spec;
    spec.coverage = 0.4f;
    spec.seed = 31;
    const SynthScene scene = synth_scene(spec);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const bool differs = scene.snow_image.at(y, x, 0) != scene.bare_image.at(y, x, 0) ||
                                 scene.snow_image.at(y, x, 1) != scene.bare_image.at(y, x, 1) ||
                                 scene.snow_image.at(y, x, 2) != scene.bare_image.at(y, x, 2);
            if (differs) REQUIRE(scene.truth_mask.at(y, x) == kClassSnow);
            if (scene.truth_mask.at(y, x) != scene.bare_mask.at(y, x))
                REQUIRE(scene.truth_mask.at(y, x) == kClassSnow);
        }
}

TEST_CASE("scene meta round trips") {
    const std::string dir = temp_dir();
    SceneSpec spec;
    spec.coverage = 0.37f;
    spec.seed = 404;
    spec.id = "meta_scene";
    const SynthScene scene = synth_scene(spec);
    write_scene_meta(scene, dir + "/scene.meta");
    const SceneMeta meta = read_scene_meta(dir + "/scene.meta");
    CHECK(meta.id == "meta_scene");
    CHECK(meta.seed == 404);
    CHECK_THAT(meta.coverage, Catch::Matchers::WithinAbs(0.37, 1e-5));
    CHECK(meta.shr_num == scene.shr_num);
    CHECK(meta.shr_den == scene.shr_den);

    {
        std::ofstream f(dir + "/bad.meta");
        f << "id=x\nnonsense line\n";
    }
    CHECK_THROWS_AS(read_scene_meta(dir + "/bad.meta"), ParseError);
    {
        std::ofstream f(dir + "/missing.meta");
        f << "id=x\nseed=1\n";
    }
    CHECK_THROWS_AS(read_scene_meta(dir + "/missing.meta"), ParseError);
}

TEST_CASE("scene generation rejects invalid specs") {
    SceneSpec spec;
    spec.height = 4;
    CHECK_THROWS_AS(synth_scene(spec), ConfigError);
    spec = {};
    spec.coverage = 1.5f;
    CHECK_THROWS_AS(synth_scene(spec), ConfigError);
    spec = {};
    spec.road_near = 0.9f;
    spec.road_offset = 0.4f;
    CHECK_THROWS_AS(synth_scene(spec), ConfigError);
}

TEST_CASE("checkpoints round trip bit exactly") {
    const std::string dir = temp_dir();
    Rng rng(306);
    ParamSet params;
    Tensor a = layers::make_normal({3, 2, 4, 4}, rng, 1.0f);
    Tensor b = layers::make_normal({7}, rng, 1.0f);
    params.add("layer1.w", a);
    params.add("layer1.b", b);

    const std::string p1 = dir + "/a.ckpt", p2 = dir + "/b.ckpt";
    save_checkpoint(params, p1, {{"alpha", 1.5f}, {"beta", -2.0f}});
    const Checkpoint loaded = load_checkpoint(p1);
    REQUIRE(loaded.params.size() == 2);
    CHECK(loaded.params.names() == std::vector<std::string>{"layer1.w", "layer1.b"});
    CHECK(loaded.params.at("layer1.w").shape() == Shape{3, 2, 4, 4});
    CHECK(loaded.params.at("layer1.w").vec() == a.vec());
    CHECK(loaded.params.at("layer1.b").vec() == b.vec());
    CHECK(loaded.meta.at("alpha") == 1.5f);
    CHECK(loaded.meta.at("beta") == -2.0f);

    save_checkpoint(loaded.params, p2, {{"alpha", 1.5f}, {"beta", -2.0f}});
    CHECK(file_fingerprint(p1) == file_fingerprint(p2));
}

TEST_CASE("checkpoint loading rejects damage without partial effects") {
    const std::string dir = temp_dir();
    ParamSet params;
    Tensor a = Tensor::full({4, 4}, 0.25f);
    params.add("w", a);
    const std::string path = dir + "/t.ckpt";
    save_checkpoint(params, path, {});

    // truncate at several byte counts: every prefix must be rejected
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    for (std::size_t keep : {4ul, 12ul, 20ul, bytes.size() - 3}) {
        const std::string trunc = dir + "/trunc.ckpt";
        std::ofstream out(trunc, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(keep));
        out.close();
        CHECK_THROWS_AS(load_checkpoint(trunc), FormatError);
    }

    {
        std::ofstream out(dir + "/magic.ckpt", std::ios::binary);
        out << "NOPE";
        out.write(bytes.data() + 4, static_cast<std::streamsize>(bytes.size() - 4));
    }
    CHECK_THROWS_AS(load_checkpoint(dir + "/magic.ckpt"), FormatError);

    // trailing garbage is also a format error
    {
        std::ofstream out(dir + "/tail.ckpt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out << "xx";
    }
    CHECK_THROWS_AS(load_checkpoint(dir + "/tail.ckpt"), FormatError);
}

TEST_CASE("csv round trips and validates structure") {
    const std::string dir = temp_dir();
    CsvTable table;
    table.header = {"id", "value"};
    table.rows = {{"a", "1.50"}, {"b", "-2.25"}};
    write_csv(table, dir + "/t.csv");
    const CsvTable back = read_csv(dir + "/t.csv");
    CHECK(back.header == table.header);
    CHECK(back.rows == table.rows);

    {
        std::ofstream f(dir + "/ragged.csv");
        f << "a,b\n1,2\n3\n";
    }
    try {
        read_csv(dir + "/ragged.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    CHECK(format_fixed(1.005, 2) == "1.00");  // snprintf rounding of the stored double
    CHECK(format_fixed(2.5, 0) == "2");
    CHECK(format_fixed(-0.125, 3) == "-0.125");
    CHECK_THROWS_AS(parse_double("abc", "test"), ParseError);
}

TEST_CASE("bar charts round trip their heights") {
    const std::string dir = temp_dir();
    BarChart chart;
    chart.title = "test";
    chart.y_label = "value";
    chart.units_per_value = 1.0;
    chart.bars = {{"a", 12.5}, {"b", 0.0}, {"c", 99.25}};
    write_bar_chart_svg(chart, dir + "/c.svg");
    const std::vector<double> heights = read_bar_heights_svg(dir + "/c.svg");
    REQUIRE(heights.size() == 3);
    CHECK(heights[0] == 12.5);
    CHECK(heights[1] == 0.0);
    CHECK(heights[2] == 99.25);

    CHECK_THROWS_AS(write_bar_chart_svg({"t", "y", {}, 1.0}, dir + "/e.svg"), InputError);
}

TEST_CASE("montage fills a 4x4 grid with mid-gray padding") {
    std::vector<InputImage> cells;
    for (int i = 0; i < 5; ++i) {
        InputImage im = InputImage::blank(8, 8, "cell" + std::to_string(i));
        for (auto& b : im.rgb) b = static_cast<std::uint8_t>(10 * (i + 1));
        cells.push_back(im);
    }
    const InputImage grid = montage_4x4(cells, 8, 8, "grid");
    CHECK(grid.height == 32);
    CHECK(grid.width == 32);
    // cell (0,0) holds image 0, cell (1,0) holds image 4, rest is padding
    CHECK(grid.at(0, 0, 0) == 10);
    CHECK(grid.at(0, 15, 1) == 20);
    CHECK(grid.at(8, 0, 0) == 50);
    CHECK(grid.at(8, 15, 0) == 128);
    CHECK(grid.at(31, 31, 2) == 128);
}

TEST_CASE("mask colorization uses the class palette") {
    MaskImage m = MaskImage::filled(2, 2, 0);
    m.values = {kClassRoad, kClassSnow, kClassSky, kClassBackground};
    const InputImage color = colorize_mask(m, "c");
    CHECK(color.at(0, 0, 0) == static_cast<int>(std::lround(kClassColors[kClassRoad].r * 255.0f)));
    CHECK(color.at(0, 1, 2) == static_cast<int>(std::lround(kClassColors[kClassSnow].b * 255.0f)));
}

TEST_CASE("manifest writes every field") {
    const std::string dir = temp_dir();
    RunManifest m;
    m.command = "test-cmd";
    m.seed = 42;
    m.add_config("k", "v");
    m.inputs.push_back("/in");
    m.outputs.push_back("/out");
    m.write(dir + "/manifest.txt");

    std::ifstream f(dir + "/manifest.txt");
    std::string text((std::istreambuf_iterator<char>(f)), {});
    CHECK(text.find("command=test-cmd") != std::string::npos);
    CHECK(text.find("seed=42") != std::string::npos);
    CHECK(text.find("config.k=v") != std::string::npos);
    CHECK(text.find("input=/in") != std::string::npos);
    CHECK(text.find("output=/out") != std::string::npos);
    CHECK(text.find("started=") != std::string::npos);
    CHECK(text.find("finished=") != std::string::npos);
    CHECK(text.find("version=") != std::string::npos);
}
