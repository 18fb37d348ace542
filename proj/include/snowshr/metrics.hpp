#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snowshr/classes.hpp"
#include "snowshr/csv.hpp"
#include "snowshr/errors.hpp"
#include "snowshr/image.hpp"

namespace snowshr {

// Row index = truth class, column index = predicted class.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(int num_classes = kNumClasses)
        : num_classes_(num_classes),
          counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
        if (num_classes < 1) throw ConfigError("ConfusionMatrix: need at least one class");
    }

    int num_classes() const { return num_classes_; }

    long long at(int truth, int pred) const {
        return counts_[static_cast<std::size_t>(truth) * num_classes_ + pred];
    }

    void add(int truth, int pred, long long n = 1) {
        if (truth < 0 || truth >= num_classes_ || pred < 0 || pred >= num_classes_)
            throw LabelError("ConfusionMatrix: class index out of range");
        counts_[static_cast<std::size_t>(truth) * num_classes_ + pred] += n;
    }

    void accumulate(const MaskImage& truth, const MaskImage& pred) {
        if (pred.height != truth.height || pred.width != truth.width)
            throw DimensionError("ConfusionMatrix: pred/truth dims differ");
        for (int y = 0; y < pred.height; ++y)
            for (int x = 0; x < pred.width; ++x) add(truth.at(y, x), pred.at(y, x));
    }

    void merge(const ConfusionMatrix& other) {
        if (other.num_classes_ != num_classes_)
            throw DimensionError("ConfusionMatrix: merging different class counts");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    }

    long long total() const {
        long long t = 0;
        for (long long c : counts_) t += c;
        return t;
    }

    long long truth_total(int c) const {
        long long t = 0;
        for (int p = 0; p < num_classes_; ++p) t += at(c, p);
        return t;
    }

    long long pred_total(int c) const {
        long long t = 0;
        for (int r = 0; r < num_classes_; ++r) t += at(r, c);
        return t;
    }

  private:
    int num_classes_;
    std::vector<long long> counts_;
};

// Per-class scores. A class absent from both truth and prediction is marked
// excluded and skipped by every mean. For included classes a 0/0 sub-ratio
// (accuracy with no truth pixels) resolves to 0.
struct ClassMetrics {
    bool included = false;
    double iou = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
};

inline std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
    std::vector<ClassMetrics> out(static_cast<std::size_t>(cm.num_classes()));
    for (int c = 0; c < cm.num_classes(); ++c) {
        const long long tp = cm.at(c, c);
        const long long truth = cm.truth_total(c);
        const long long pred = cm.pred_total(c);
        ClassMetrics& m = out[static_cast<std::size_t>(c)];
        m.included = truth + pred > 0;
        if (!m.included) continue;
        const long long fp = pred - tp, fn = truth - tp;
        m.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        m.accuracy = truth > 0 ? static_cast<double>(tp) / static_cast<double>(truth) : 0.0;
        m.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return out;
}

namespace detail {

template <typename Pick>
double class_mean(const ConfusionMatrix& cm, Pick pick) {
    if (cm.total() == 0) throw UndefinedMetricError("metrics on an empty confusion matrix");
    const auto per = per_class_metrics(cm);
    double sum = 0.0;
    int n = 0;
    for (const ClassMetrics& m : per)
        if (m.included) {
            sum += pick(m);
            ++n;
        }
    return sum / n;
}

}  // namespace detail

inline std::vector<double> iou_per_class(const ConfusionMatrix& cm) {
    const auto per = per_class_metrics(cm);
    std::vector<double> out;
    out.reserve(per.size());
    for (const ClassMetrics& m : per) out.push_back(m.iou);
    return out;
}

inline double mean_iou(const ConfusionMatrix& cm) {
    return detail::class_mean(cm, [](const ClassMetrics& m) { return m.iou; });
}

inline double mean_accuracy(const ConfusionMatrix& cm) {
    return detail::class_mean(cm, [](const ClassMetrics& m) { return m.accuracy; });
}

inline double mean_f1(const ConfusionMatrix& cm) {
    return detail::class_mean(cm, [](const ClassMetrics& m) { return m.f1; });
}

inline double global_pixel_accuracy(const ConfusionMatrix& cm) {
    const long long total = cm.total();
    if (total == 0) throw UndefinedMetricError("metrics on an empty confusion matrix");
    long long correct = 0;
    for (int c = 0; c < cm.num_classes(); ++c) correct += cm.at(c, c);
    return static_cast<double>(correct) / static_cast<double>(total);
}

// Report layout: one row per class (excluded classes carry empty cells), a
// "mean" row with the class means, and a "global_pixel" row carrying overall
// pixel accuracy in the accuracy column.
inline CsvTable metrics_report_table(const ConfusionMatrix& cm) {
    CsvTable table;
    table.header = {"class", "IoU", "accuracy", "F1"};
    const auto per = per_class_metrics(cm);
    for (int c = 0; c < cm.num_classes(); ++c) {
        const ClassMetrics& m = per[static_cast<std::size_t>(c)];
        const std::string name = cm.num_classes() == kNumClasses
                                     ? class_names()[static_cast<std::size_t>(c)]
                                     : "class" + std::to_string(c);
        if (m.included)
            table.rows.push_back({name, format_fixed(m.iou, 4), format_fixed(m.accuracy, 4),
                                  format_fixed(m.f1, 4)});
        else
            table.rows.push_back({name, "", "", ""});
    }
    table.rows.push_back({"mean", format_fixed(mean_iou(cm), 4),
                          format_fixed(mean_accuracy(cm), 4), format_fixed(mean_f1(cm), 4)});
    table.rows.push_back({"global_pixel", "", format_fixed(global_pixel_accuracy(cm), 4), ""});
    return table;
}

}  // namespace snowshr
