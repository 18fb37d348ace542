#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snowshr/adam.hpp"
#include "snowshr/checkpoint.hpp"
#include "snowshr/csv.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"
#include "snowshr/layers.hpp"
#include "snowshr/ops.hpp"
#include "snowshr/params.hpp"
#include "snowshr/rng.hpp"
#include "snowshr/samples.hpp"

// Snow-to-bare image translation: U-Net generator plus patch discriminator,
// trained with adversarial + weighted L1 loss. Images cross the network
// boundary normalized to [-1,1]; everything stored on disk is [0,1].

namespace snowshr {

struct TranslatorConfig {
    int input_height = 64;
    int input_width = 96;
    int base_channels = 16;
    int unet_depth = 4;
    float lambda_l1 = 100.0f;
    int epochs = 30;
    int batch_size = 1;
    float lr = 2e-4f;

    void validate() const {
        if (input_height < 1 || input_width < 1)
            throw ConfigError("TranslatorConfig: non-positive input dims");
        if (base_channels < 1) throw ConfigError("TranslatorConfig: non-positive base channels");
        if (unet_depth < 1) throw ConfigError("TranslatorConfig: depth must be at least 1");
        const int div = 1 << unet_depth;
        if (input_height % div != 0 || input_width % div != 0)
            throw ConfigError("TranslatorConfig: input dims must be divisible by 2^depth = " +
                              std::to_string(div));
        if (lambda_l1 < 0.0f) throw ConfigError("TranslatorConfig: lambda_l1 must be >= 0");
        if (epochs < 0 || batch_size < 1 || lr <= 0.0f)
            throw ConfigError("TranslatorConfig: bad training hyperparameters");
    }

    // encoder stage channel count, capped at 8x base
    int stage_channels(int i) const {
        const int c = base_channels << std::min(i, 3);
        return std::min(c, base_channels * 8);
    }

    // spatial dims at the deepest encoder stage
    std::pair<int, int> bottleneck_dims() const {
        return {input_height >> unet_depth, input_width >> unet_depth};
    }
};

// -------------------------------------------------- [-1,1] normalization

inline Tensor images_to_pm1(const std::vector<const InputImage*>& images) {
    if (images.empty()) throw InputError("images_to_pm1: empty batch");
    const int H = images[0]->height, W = images[0]->width;
    Tensor t = Tensor::zeros({static_cast<int>(images.size()), 3, H, W});
    float* p = t.data();
    for (std::size_t n = 0; n < images.size(); ++n) {
        const InputImage& img = *images[n];
        if (img.height != H || img.width != W)
            throw DimensionError("images_to_pm1: mixed dims in batch");
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    *p++ = static_cast<float>(img.at(y, x, c)) / 255.0f * 2.0f - 1.0f;
    }
    return t;
}

inline Tensor image_to_pm1(const InputImage& img) { return images_to_pm1({&img}); }

inline InputImage pm1_to_image(const Tensor& t, const std::string& id) {
    if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != 3)
        throw DimensionError("pm1_to_image: expected (1,3,H,W), got " + shape_str(t.shape()));
    const int H = t.dim(2), W = t.dim(3);
    InputImage img = InputImage::blank(H, W, id);
    const float* p = t.data();
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const float v = (*p++ + 1.0f) / 2.0f;
                img.at(y, x, c) = static_cast<std::uint8_t>(
                    std::clamp(static_cast<int>(std::lround(v * 255.0f)), 0, 255));
            }
    return img;
}

// ---------------------------------------------------------------- network

class Translator {
  public:
    Translator() = default;

    static Translator build(const TranslatorConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        Translator t;
        t.cfg_ = cfg;
        Rng rng(seed ^ 0x72616e736c61746full);
        constexpr float kInit = 0.02f;
        const int D = cfg.unet_depth;

        layers::add_conv(t.g_, "enc0", cfg.stage_channels(0), 3, 4, rng, kInit, true);
        for (int i = 1; i < D; ++i) {
            layers::add_conv(t.g_, "enc" + std::to_string(i), cfg.stage_channels(i),
                             cfg.stage_channels(i - 1), 4, rng, kInit);
            layers::add_norm(t.g_, "enc" + std::to_string(i) + ".n", cfg.stage_channels(i));
        }
        for (int j = D - 1; j >= 1; --j) {
            const int in_ch = j == D - 1 ? cfg.stage_channels(j) : 2 * cfg.stage_channels(j);
            layers::add_tconv(t.g_, "dec" + std::to_string(j), in_ch, cfg.stage_channels(j - 1), 4,
                              rng, kInit);
            layers::add_norm(t.g_, "dec" + std::to_string(j) + ".n", cfg.stage_channels(j - 1));
        }
        const int out_in = D == 1 ? cfg.stage_channels(0) : 2 * cfg.stage_channels(0);
        layers::add_tconv(t.g_, "out", out_in, 3, 4, rng, kInit, true);

        const int b = cfg.base_channels;
        layers::add_conv(t.d_, "c0", b, 6, 4, rng, kInit, true);
        layers::add_conv(t.d_, "c1", 2 * b, b, 4, rng, kInit);
        layers::add_norm(t.d_, "c1.n", 2 * b);
        layers::add_conv(t.d_, "c2", 4 * b, 2 * b, 4, rng, kInit);
        layers::add_norm(t.d_, "c2.n", 4 * b);
        layers::add_conv(t.d_, "head", 1, 4 * b, 4, rng, kInit, true);
        return t;
    }

    const TranslatorConfig& config() const { return cfg_; }
    ParamSet& generator_params() { return g_; }
    ParamSet& discriminator_params() { return d_; }
    const ParamSet& generator_params() const { return g_; }
    const ParamSet& discriminator_params() const { return d_; }

    // U-Net forward; dropout fires in the two innermost decoder stages only
    // when a dropout rng is supplied (training).
    Tensor generator(Tape* tape, const Tensor& x, Rng* dropout_rng = nullptr) const {
        const int D = cfg_.unet_depth;
        std::vector<Tensor> skips;
        Tensor h = x;
        for (int i = 0; i < D; ++i) {
            h = layers::conv(tape, g_, "enc" + std::to_string(i), h, 2, 1);
            if (i > 0) h = layers::norm(tape, g_, "enc" + std::to_string(i) + ".n", h);
            h = leaky_relu(tape, h, 0.2f);
            skips.push_back(h);
        }
        for (int j = D - 1; j >= 1; --j) {
            h = layers::tconv(tape, g_, "dec" + std::to_string(j), h, 2, 1);
            h = layers::norm(tape, g_, "dec" + std::to_string(j) + ".n", h);
            h = relu(tape, h);
            if (dropout_rng && j >= D - 2) h = dropout(tape, h, 0.5f, *dropout_rng);
            h = concat_channels(tape, {h, skips[static_cast<std::size_t>(j - 1)]});
        }
        h = layers::tconv(tape, g_, "out", h, 2, 1);
        return snowshr::tanh(tape, h);
    }

    // Patch logits over the 6-channel (condition, candidate) stack.
    Tensor discriminator(Tape* tape, const Tensor& condition, const Tensor& candidate) const {
        Tensor h = concat_channels(tape, {condition, candidate});
        h = leaky_relu(tape, layers::conv(tape, d_, "c0", h, 2, 1), 0.2f);
        h = layers::conv(tape, d_, "c1", h, 2, 1);
        h = leaky_relu(tape, layers::norm(tape, d_, "c1.n", h), 0.2f);
        h = layers::conv(tape, d_, "c2", h, 2, 1);
        h = leaky_relu(tape, layers::norm(tape, d_, "c2.n", h), 0.2f);
        return layers::conv(tape, d_, "head", h, 1, 1);
    }

    InputImage translate(const InputImage& image) const {
        if (image.height != cfg_.input_height || image.width != cfg_.input_width)
            throw InputError("translate: image is " + std::to_string(image.height) + "x" +
                             std::to_string(image.width) + " but the network expects " +
                             std::to_string(cfg_.input_height) + "x" +
                             std::to_string(cfg_.input_width));
        const Tensor out = generator(nullptr, image_to_pm1(image));
        return pm1_to_image(out, image.id);
    }

    void set_config(const TranslatorConfig& cfg) { cfg_ = cfg; }

  private:
    TranslatorConfig cfg_;
    ParamSet g_, d_;
};

// ------------------------------------------------------------ checkpoints

inline void save_translator(const Translator& model, const std::string& path,
                            const std::vector<std::pair<std::string, float>>& training_meta = {}) {
    ParamSet combined;
    const ParamSet& g = model.generator_params();
    for (std::size_t i = 0; i < g.size(); ++i) combined.add("G/" + g.names()[i], g.tensor(i));
    const ParamSet& d = model.discriminator_params();
    for (std::size_t i = 0; i < d.size(); ++i) combined.add("D/" + d.names()[i], d.tensor(i));

    const TranslatorConfig& cfg = model.config();
    std::vector<std::pair<std::string, float>> meta = {
        {"input_height", static_cast<float>(cfg.input_height)},
        {"input_width", static_cast<float>(cfg.input_width)},
        {"base_channels", static_cast<float>(cfg.base_channels)},
        {"unet_depth", static_cast<float>(cfg.unet_depth)},
        {"lambda_l1", cfg.lambda_l1},
        {"epochs", static_cast<float>(cfg.epochs)},
        {"batch_size", static_cast<float>(cfg.batch_size)},
        {"lr", cfg.lr},
    };
    meta.insert(meta.end(), training_meta.begin(), training_meta.end());
    save_checkpoint(combined, path, meta);
}

inline Translator load_translator(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    auto meta_float = [&](const char* key) {
        auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end())
            throw FormatError("translator checkpoint '" + path + "': missing meta '" +
                              std::string(key) + "'");
        return it->second;
    };
    auto meta_int = [&](const char* key) { return static_cast<int>(std::lround(meta_float(key))); };
    TranslatorConfig cfg;
    cfg.input_height = meta_int("input_height");
    cfg.input_width = meta_int("input_width");
    cfg.base_channels = meta_int("base_channels");
    cfg.unet_depth = meta_int("unet_depth");
    cfg.lambda_l1 = meta_float("lambda_l1");
    cfg.epochs = meta_int("epochs");
    cfg.batch_size = meta_int("batch_size");
    cfg.lr = meta_float("lr");
    cfg.validate();

    Translator model = Translator::build(cfg, 0);
    auto restore = [&](ParamSet& dst, const std::string& prefix) {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const std::string full = prefix + dst.names()[i];
            if (!ckpt.params.contains(full))
                throw FormatError("translator checkpoint '" + path + "': missing tensor '" + full +
                                  "'");
            const Tensor& src = ckpt.params.at(full);
            Tensor& t = dst.tensor(i);
            if (src.shape() != t.shape())
                throw FormatError("translator checkpoint '" + path + "': tensor '" + full +
                                  "' has shape " + shape_str(src.shape()) + ", expected " +
                                  shape_str(t.shape()));
            std::copy(src.data(), src.data() + src.size(), t.data());
        }
    };
    restore(model.generator_params(), "G/");
    restore(model.discriminator_params(), "D/");
    return model;
}

// ---------------------------------------------------------------- training

struct TranslatorEpochRecord {
    int epoch = 0;
    double d_loss = 0.0;
    double g_adv = 0.0;
    double g_l1 = 0.0;
    double g_total = 0.0;
};

class TranslatorTrainer {
  public:
    TranslatorTrainer(std::vector<PairedSample> pairs, const TranslatorConfig& cfg,
                      std::uint64_t seed)
        : pairs_(std::move(pairs)),
          model_(Translator::build(cfg, seed)),
          rng_(Rng(seed).fork(0x747261696eull)),
          adam_g_({cfg.lr, 0.5f, 0.999f, 1e-8f}),
          adam_d_({cfg.lr, 0.5f, 0.999f, 1e-8f}) {
        if (pairs_.empty()) throw InputError("train_translator: empty dataset");
        for (const PairedSample& p : pairs_) {
            p.validate();
            if (p.snow_image.height != cfg.input_height || p.snow_image.width != cfg.input_width)
                throw InputError("train_translator: pair '" + p.id + "' is " +
                                 std::to_string(p.snow_image.height) + "x" +
                                 std::to_string(p.snow_image.width) + ", expected " +
                                 std::to_string(cfg.input_height) + "x" +
                                 std::to_string(cfg.input_width));
        }
    }

    TranslatorEpochRecord run_epoch() {
        const TranslatorConfig& cfg = model_.config();
        std::vector<std::size_t> order(pairs_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng_.shuffle(order);

        TranslatorEpochRecord rec;
        rec.epoch = ++epoch_;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<const InputImage*> snow, bare;
            for (std::size_t k = start; k < end; ++k) {
                snow.push_back(&pairs_[order[k]].snow_image);
                bare.push_back(&pairs_[order[k]].bare_image);
            }
            const Tensor cond = images_to_pm1(snow);
            const Tensor real = images_to_pm1(bare);

            // generator forward once; its fake feeds both phases
            Tape tape_g;
            const Tensor fake = model_.generator(&tape_g, cond, &rng_);
            const Tensor fake_const = fake.detach_copy();

            {
                Tape tape_d;
                const Tensor lr_real = model_.discriminator(&tape_d, cond, real);
                const Tensor lr_fake = model_.discriminator(&tape_d, cond, fake_const);
                const Tensor ones = Tensor::full(lr_real.shape(), 1.0f);
                const Tensor zeros = Tensor::zeros(lr_fake.shape());
                Tensor loss_d = scale(&tape_d,
                                      add(&tape_d, bce_with_logits(&tape_d, lr_real, ones),
                                          bce_with_logits(&tape_d, lr_fake, zeros)),
                                      0.5f);
                model_.discriminator_params().zero_grads();
                backward(loss_d, tape_d);
                adam_d_.step(model_.discriminator_params());
                rec.d_loss += loss_d.scalar();
            }
            {
                const Tensor logits = model_.discriminator(&tape_g, cond, fake);
                const Tensor ones = Tensor::full(logits.shape(), 1.0f);
                Tensor adv = bce_with_logits(&tape_g, logits, ones);
                Tensor l1 = l1_loss(&tape_g, fake, real);
                Tensor loss_g = add(&tape_g, adv, scale(&tape_g, l1, cfg.lambda_l1));
                model_.generator_params().zero_grads();
                backward(loss_g, tape_g);
                adam_g_.step(model_.generator_params());
                rec.g_adv += adv.scalar();
                rec.g_l1 += l1.scalar();
                rec.g_total += loss_g.scalar();
            }
            ++batches;
        }
        rec.d_loss /= batches;
        rec.g_adv /= batches;
        rec.g_l1 /= batches;
        rec.g_total /= batches;
        return rec;
    }

    // Mean absolute error between translated snow images and their bare
    // targets, in [0,1] image space.
    double validation_l1(const std::vector<PairedSample>& val) const {
        if (val.empty()) throw InputError("validation_l1: empty set");
        double acc = 0.0;
        for (const PairedSample& p : val) {
            const Tensor out = model_.generator(nullptr, image_to_pm1(p.snow_image));
            const Tensor target = image_to_pm1(p.bare_image);
            double e = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i)
                e += std::fabs(out.data()[i] - target.data()[i]) / 2.0;
            acc += e / static_cast<double>(out.size());
        }
        return acc / static_cast<double>(val.size());
    }

    Translator& model() { return model_; }
    const Translator& model() const { return model_; }

  private:
    std::vector<PairedSample> pairs_;
    Translator model_;
    Rng rng_;
    AdamState adam_g_, adam_d_;
    int epoch_ = 0;
};

struct TrainedTranslator {
    Translator model;
    std::vector<TranslatorEpochRecord> history;
};

inline TrainedTranslator train_translator(std::vector<PairedSample> pairs,
                                          const TranslatorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    TranslatorTrainer trainer(std::move(pairs), cfg, seed);
    TrainedTranslator out;
    for (int e = 0; e < cfg.epochs; ++e) out.history.push_back(trainer.run_epoch());
    out.model = std::move(trainer.model());
    return out;
}

inline CsvTable loss_history_table(const std::vector<TranslatorEpochRecord>& history) {
    CsvTable table;
    table.header = {"epoch", "d_loss", "g_adv", "g_l1"};
    for (const TranslatorEpochRecord& r : history)
        table.rows.push_back({std::to_string(r.epoch), format_fixed(r.d_loss, 6),
                              format_fixed(r.g_adv, 6), format_fixed(r.g_l1, 6)});
    return table;
}

}  // namespace snowshr
