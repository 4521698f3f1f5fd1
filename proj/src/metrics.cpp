#include "shmssl/metrics.hpp"

#include "shmssl/error.hpp"

#include <cstdio>
#include <numeric>

namespace shmssl {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names)
    : k_(num_classes), counts_(num_classes * num_classes, 0), names_(std::move(class_names)) {
    if (names_.empty()) {
        for (std::size_t i = 0; i < k_; ++i) names_.push_back("class" + std::to_string(i));
    } else if (names_.size() != k_) {
        throw InputError("confusion matrix: " + std::to_string(names_.size()) + " class names for " +
                         std::to_string(k_) + " classes");
    }
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < k_; ++i) t += counts_[i * k_ + i];
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < k_; ++p) s += at(truth, p);
    return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
    std::uint64_t s = 0;
    for (std::size_t r = 0; r < k_; ++r) s += at(r, predicted);
    return s;
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw InputError("confusion matrix rows must be square");
        for (std::size_t p = 0; p < rows.size(); ++p) cm.add(r, p, rows[r][p]);
    }
    return cm;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes,
                          std::vector<std::string> class_names) {
    if (predictions.size() != labels.size()) {
        throw InputError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm(num_classes, std::move(class_names));
    const auto k = static_cast<int>(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k || predictions[i] < 0 || predictions[i] >= k) {
            throw InputError("confusion: sample " + std::to_string(i) + " has class outside [0, " +
                             std::to_string(k) + ")");
        }
        cm.add(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(predictions[i]));
    }
    return cm;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
    if (cm.num_classes() < 2) throw InputError("per_class_metrics: need at least 2 classes");
    std::vector<ClassMetrics> out(cm.num_classes());
    for (std::size_t k = 0; k < cm.num_classes(); ++k) {
        ClassMetrics& m = out[k];
        const auto tp = static_cast<double>(cm.at(k, k));
        const std::uint64_t predicted = cm.column_sum(k);  // TP + FP
        m.support = cm.row_sum(k);                         // TP + FN
        if (predicted == 0) {
            m.degenerate_precision = true;
        } else {
            m.precision = tp / static_cast<double>(predicted);
        }
        if (m.support == 0) {
            m.degenerate_recall = true;
        } else {
            m.recall = tp / static_cast<double>(m.support);
        }
        if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return out;
}

OverallMetrics overall(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw InputError("overall: confusion matrix is empty");
    OverallMetrics o;
    o.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    const auto per_class = per_class_metrics(cm);
    double f1 = 0.0;
    for (const auto& m : per_class) f1 += m.f1;
    o.macro_f1 = f1 / static_cast<double>(per_class.size());
    return o;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string s = "true\\predicted";
    for (const auto& n : cm.class_names()) s += "," + n;
    s += "\n";
    for (std::size_t r = 0; r < cm.num_classes(); ++r) {
        s += cm.class_names()[r];
        for (std::size_t p = 0; p < cm.num_classes(); ++p) s += "," + std::to_string(cm.at(r, p));
        s += "\n";
    }
    char buf[64];
    const double acc = cm.total() ? static_cast<double>(cm.trace()) / static_cast<double>(cm.total()) : 0.0;
    std::snprintf(buf, sizeof buf, "accuracy,%.6f\n", acc);
    return s + buf;
}

}  // namespace shmssl
