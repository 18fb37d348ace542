#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snowshr/adam.hpp"
#include "snowshr/checkpoint.hpp"
#include "snowshr/classes.hpp"
#include "snowshr/csv.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"
#include "snowshr/layers.hpp"
#include "snowshr/metrics.hpp"
#include "snowshr/ops.hpp"
#include "snowshr/params.hpp"
#include "snowshr/rng.hpp"
#include "snowshr/samples.hpp"

// Semantic segmentation: depthwise-separable backbone at output stride 8,
// atrous spatial pyramid pooling, and a single low-level skip decoder.
// Inputs are square RGB images in [0,1]; output is a per-pixel 6-class mask.

namespace snowshr {

struct SegmenterConfig {
    int num_classes = kNumClasses;
    int input_size = 96;
    float width_multiplier = 1.0f;
    std::vector<int> aspp_rates = {1, 2, 4, 6};
    bool use_global_branch = true;
    int epochs = 30;
    int batch_size = 16;
    float lr = 1e-3f;

    void validate() const {
        if (num_classes != kNumClasses)
            throw ConfigError("SegmenterConfig: class list is fixed at " +
                              std::to_string(kNumClasses) + " entries");
        if (input_size < 8 || input_size % 8 != 0)
            throw ConfigError("SegmenterConfig: input size must be a positive multiple of 8");
        if (width_multiplier <= 0.0f) throw ConfigError("SegmenterConfig: non-positive width");
        if (aspp_rates.empty() || aspp_rates.front() != 1)
            throw ConfigError("SegmenterConfig: aspp rates must start at 1");
        for (std::size_t i = 1; i < aspp_rates.size(); ++i)
            if (aspp_rates[i] <= aspp_rates[i - 1])
                throw ConfigError("SegmenterConfig: aspp rates must be strictly increasing");
        if (epochs < 0 || batch_size < 1 || lr <= 0.0f)
            throw ConfigError("SegmenterConfig: bad training hyperparameters");
    }

    int ch(int base) const {
        return std::max(4, static_cast<int>(std::lround(base * width_multiplier)));
    }
};

inline MaskImage argmax_mask(const Tensor& logits) {
    if (logits.rank() != 4 || logits.dim(0) != 1)
        throw DimensionError("argmax_mask: expected (1,C,H,W), got " + shape_str(logits.shape()));
    const int C = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    MaskImage mask = MaskImage::filled(H, W, 0);
    const float* p = logits.data();
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t px = static_cast<std::size_t>(y) * W + x;
            int best = 0;
            float best_v = p[px];
            // ties keep the lowest class index
            for (int c = 1; c < C; ++c) {
                const float v = p[c * plane + px];
                if (v > best_v) {
                    best_v = v;
                    best = c;
                }
            }
            mask.at(y, x) = static_cast<std::uint8_t>(best);
        }
    return mask;
}

class Segmenter {
  public:
    Segmenter() = default;

    static Segmenter build(const SegmenterConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        Segmenter s;
        s.cfg_ = cfg;
        Rng rng(seed ^ 0x7365676d656e74ull);
        auto he = layers::he_stddev;

        auto add_ds = [&](const std::string& name, int in, int out) {
            layers::add_depthwise(s.p_, name + ".dw", in, 3, rng, he(9));
            layers::add_norm(s.p_, name + ".dwn", in);
            layers::add_conv(s.p_, name + ".pw", out, in, 1, rng, he(in));
            layers::add_norm(s.p_, name + ".pwn", out);
        };

        layers::add_conv(s.p_, "stem", cfg.ch(16), 3, 3, rng, he(27));
        layers::add_norm(s.p_, "stem.n", cfg.ch(16));
        add_ds("b1", cfg.ch(16), cfg.ch(24));
        add_ds("b2", cfg.ch(24), cfg.ch(32));
        add_ds("b3", cfg.ch(32), cfg.ch(48));
        add_ds("b4", cfg.ch(48), cfg.ch(64));
        add_ds("b5", cfg.ch(64), cfg.ch(96));

        const int f = cfg.ch(96), br = cfg.ch(32);
        for (std::size_t i = 0; i < cfg.aspp_rates.size(); ++i) {
            const std::string name = "aspp" + std::to_string(i);
            if (cfg.aspp_rates[i] == 1)
                layers::add_conv(s.p_, name, br, f, 1, rng, he(f));
            else
                layers::add_conv(s.p_, name, br, f, 3, rng, he(9 * f));
            layers::add_norm(s.p_, name + ".n", br);
        }
        if (cfg.use_global_branch) layers::add_conv(s.p_, "aspp_gap", br, f, 1, rng, he(f), true);
        const int cat = br * (static_cast<int>(cfg.aspp_rates.size()) +
                              (cfg.use_global_branch ? 1 : 0));
        layers::add_conv(s.p_, "aspp_proj", cfg.ch(48), cat, 1, rng, he(cat));
        layers::add_norm(s.p_, "aspp_proj.n", cfg.ch(48));

        layers::add_conv(s.p_, "low", cfg.ch(16), cfg.ch(24), 1, rng, he(cfg.ch(24)));
        layers::add_norm(s.p_, "low.n", cfg.ch(16));
        const int fuse_in = cfg.ch(48) + cfg.ch(16);
        layers::add_conv(s.p_, "fuse", cfg.ch(32), fuse_in, 3, rng, he(9 * fuse_in));
        layers::add_norm(s.p_, "fuse.n", cfg.ch(32));
        layers::add_conv(s.p_, "head", cfg.num_classes, cfg.ch(32), 1, rng, he(cfg.ch(32)), true);
        return s;
    }

    const SegmenterConfig& config() const { return cfg_; }
    ParamSet& params() { return p_; }
    const ParamSet& params() const { return p_; }

    Tensor logits(Tape* tape, const Tensor& x) const {
        auto ds = [&](const std::string& name, const Tensor& in, int stride, int dilation = 1) {
            Tensor h = layers::dwconv(tape, p_, name + ".dw", in, stride, dilation, dilation);
            h = relu(tape, layers::norm(tape, p_, name + ".dwn", h));
            h = layers::conv(tape, p_, name + ".pw", h, 1, 0);
            return relu(tape, layers::norm(tape, p_, name + ".pwn", h));
        };

        Tensor h = layers::conv(tape, p_, "stem", x, 2, 1);
        h = relu(tape, layers::norm(tape, p_, "stem.n", h));
        const Tensor low_feat = ds("b1", h, 1);
        h = ds("b2", low_feat, 2);
        h = ds("b3", h, 1);
        h = ds("b4", h, 2);
        h = ds("b5", h, 1);

        std::vector<Tensor> branches;
        for (std::size_t i = 0; i < cfg_.aspp_rates.size(); ++i) {
            const std::string name = "aspp" + std::to_string(i);
            const int r = cfg_.aspp_rates[i];
            Tensor b = r == 1 ? layers::conv(tape, p_, name, h, 1, 0)
                              : layers::conv(tape, p_, name, h, 1, r, r);
            branches.push_back(relu(tape, layers::norm(tape, p_, name + ".n", b)));
        }
        if (cfg_.use_global_branch) {
            // a 1x1 map has no spatial statistics, so this branch carries a
            // bias instead of a norm
            Tensor g = global_avg_pool(tape, h);
            g = relu(tape, layers::conv(tape, p_, "aspp_gap", g, 1, 0));
            branches.push_back(bilinear_upsample(tape, g, h.dim(2)));
        }
        Tensor a = concat_channels(tape, branches);
        a = layers::conv(tape, p_, "aspp_proj", a, 1, 0);
        a = relu(tape, layers::norm(tape, p_, "aspp_proj.n", a));

        Tensor up = bilinear_upsample(tape, a, 4);
        Tensor low = layers::conv(tape, p_, "low", low_feat, 1, 0);
        low = relu(tape, layers::norm(tape, p_, "low.n", low));
        Tensor fused = concat_channels(tape, {up, low});
        fused = layers::conv(tape, p_, "fuse", fused, 1, 1);
        fused = relu(tape, layers::norm(tape, p_, "fuse.n", fused));
        Tensor out = layers::conv(tape, p_, "head", fused, 1, 0);
        return bilinear_upsample(tape, out, 2);
    }

    MaskImage segment(const InputImage& image) const {
        if (image.height != cfg_.input_size || image.width != cfg_.input_size)
            throw InputError("segment: image is " + std::to_string(image.height) + "x" +
                             std::to_string(image.width) + " but the network expects " +
                             std::to_string(cfg_.input_size) + "x" +
                             std::to_string(cfg_.input_size));
        return argmax_mask(logits(nullptr, to_tensor(image)));
    }

    void set_config(const SegmenterConfig& cfg) { cfg_ = cfg; }

  private:
    SegmenterConfig cfg_;
    ParamSet p_;
};

// ------------------------------------------------------------ checkpoints

inline void save_segmenter(const Segmenter& model, const std::string& path,
                           const std::vector<std::pair<std::string, float>>& training_meta = {}) {
    ParamSet combined;
    const ParamSet& p = model.params();
    for (std::size_t i = 0; i < p.size(); ++i) combined.add("S/" + p.names()[i], p.tensor(i));

    const SegmenterConfig& cfg = model.config();
    std::vector<std::pair<std::string, float>> meta = {
        {"num_classes", static_cast<float>(cfg.num_classes)},
        {"input_size", static_cast<float>(cfg.input_size)},
        {"width_multiplier", cfg.width_multiplier},
        {"rate_count", static_cast<float>(cfg.aspp_rates.size())},
        {"use_global_branch", cfg.use_global_branch ? 1.0f : 0.0f},
        {"epochs", static_cast<float>(cfg.epochs)},
        {"batch_size", static_cast<float>(cfg.batch_size)},
        {"lr", cfg.lr},
    };
    for (std::size_t i = 0; i < cfg.aspp_rates.size(); ++i)
        meta.emplace_back("rate" + std::to_string(i), static_cast<float>(cfg.aspp_rates[i]));
    meta.insert(meta.end(), training_meta.begin(), training_meta.end());
    save_checkpoint(combined, path, meta);
}

inline Segmenter load_segmenter(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    auto meta_float = [&](const std::string& key) {
        auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end())
            throw FormatError("segmenter checkpoint '" + path + "': missing meta '" + key + "'");
        return it->second;
    };
    auto meta_int = [&](const std::string& key) {
        return static_cast<int>(std::lround(meta_float(key)));
    };
    SegmenterConfig cfg;
    cfg.num_classes = meta_int("num_classes");
    cfg.input_size = meta_int("input_size");
    cfg.width_multiplier = meta_float("width_multiplier");
    cfg.aspp_rates.clear();
    const int n_rates = meta_int("rate_count");
    for (int i = 0; i < n_rates; ++i) cfg.aspp_rates.push_back(meta_int("rate" + std::to_string(i)));
    cfg.use_global_branch = meta_float("use_global_branch") != 0.0f;
    cfg.epochs = meta_int("epochs");
    cfg.batch_size = meta_int("batch_size");
    cfg.lr = meta_float("lr");
    cfg.validate();

    Segmenter model = Segmenter::build(cfg, 0);
    ParamSet& dst = model.params();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const std::string full = "S/" + dst.names()[i];
        if (!ckpt.params.contains(full))
            throw FormatError("segmenter checkpoint '" + path + "': missing tensor '" + full + "'");
        const Tensor& src = ckpt.params.at(full);
        Tensor& t = dst.tensor(i);
        if (src.shape() != t.shape())
            throw FormatError("segmenter checkpoint '" + path + "': tensor '" + full +
                              "' has shape " + shape_str(src.shape()) + ", expected " +
                              shape_str(t.shape()));
        std::copy(src.data(), src.data() + src.size(), t.data());
    }
    return model;
}

// ---------------------------------------------------------------- training

struct SegmenterEpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double val_miou = 0.0;
};

class SegmenterTrainer {
  public:
    SegmenterTrainer(std::vector<AnnotatedSample> samples, const SegmenterConfig& cfg,
                     std::uint64_t seed)
        : samples_(std::move(samples)),
          model_(Segmenter::build(cfg, seed)),
          rng_(Rng(seed).fork(0x7365677472ull)),
          adam_({cfg.lr, 0.9f, 0.999f, 1e-8f}) {
        if (samples_.empty()) throw InputError("train_segmenter: empty dataset");
        for (const AnnotatedSample& s : samples_) {
            s.validate();
            if (s.image.height != cfg.input_size || s.image.width != cfg.input_size)
                throw InputError("train_segmenter: sample '" + s.id + "' is " +
                                 std::to_string(s.image.height) + "x" +
                                 std::to_string(s.image.width) + ", expected " +
                                 std::to_string(cfg.input_size) + "x" +
                                 std::to_string(cfg.input_size));
        }
    }

    double run_epoch() {
        const SegmenterConfig& cfg = model_.config();
        std::vector<std::size_t> order(samples_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng_.shuffle(order);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const int n = static_cast<int>(end - start);
            Tensor x = Tensor::zeros({n, 3, cfg.input_size, cfg.input_size});
            std::vector<MaskImage> masks;
            masks.reserve(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) {
                const AnnotatedSample& s = samples_[order[start + static_cast<std::size_t>(k)]];
                const Tensor xi = to_tensor(s.image);
                std::copy(xi.data(), xi.data() + xi.size(),
                          x.data() + static_cast<std::size_t>(k) * xi.size());
                masks.push_back(s.mask);
            }
            Tape tape;
            Tensor out = model_.logits(&tape, x);
            Tensor loss = softmax_cross_entropy(&tape, out, masks);
            model_.params().zero_grads();
            backward(loss, tape);
            adam_.step(model_.params());
            loss_sum += loss.scalar();
            ++batches;
        }
        ++epoch_;
        return loss_sum / batches;
    }

    double evaluate_miou(const std::vector<AnnotatedSample>& val) const {
        ConfusionMatrix cm(model_.config().num_classes);
        for (const AnnotatedSample& s : val) cm.accumulate(s.mask, model_.segment(s.image));
        return mean_iou(cm);
    }

    int epoch() const { return epoch_; }
    Segmenter& model() { return model_; }
    const Segmenter& model() const { return model_; }

  private:
    std::vector<AnnotatedSample> samples_;
    Segmenter model_;
    Rng rng_;
    AdamState adam_;
    int epoch_ = 0;
};

struct TrainedSegmenter {
    Segmenter model;
    std::vector<SegmenterEpochRecord> history;
};

// Held-out mIoU is logged per epoch; with no validation set the training set
// stands in (documented fallback for tiny demos).
inline TrainedSegmenter train_segmenter(std::vector<AnnotatedSample> samples,
                                        const SegmenterConfig& cfg, std::uint64_t seed,
                                        const std::vector<AnnotatedSample>& val = {}) {
    cfg.validate();
    SegmenterTrainer trainer(std::move(samples), cfg, seed);
    TrainedSegmenter out;
    for (int e = 0; e < cfg.epochs; ++e) {
        SegmenterEpochRecord rec;
        rec.loss = trainer.run_epoch();
        rec.epoch = trainer.epoch();
        rec.val_miou = 0.0;
        if (!val.empty()) rec.val_miou = trainer.evaluate_miou(val);
        out.history.push_back(rec);
    }
    out.model = std::move(trainer.model());
    return out;
}

inline CsvTable metric_history_table(const std::vector<SegmenterEpochRecord>& history) {
    CsvTable table;
    table.header = {"epoch", "loss", "val_miou"};
    for (const SegmenterEpochRecord& r : history)
        table.rows.push_back(
            {std::to_string(r.epoch), format_fixed(r.loss, 6), format_fixed(r.val_miou, 6)});
    return table;
}

}  // namespace snowshr
