#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shmssl {

/// K x K counts; entry (r, p) counts samples of true class r predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names = {});

    std::size_t num_classes() const noexcept { return k_; }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
    void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1) { counts_[truth * k_ + predicted] += n; }
    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;
    std::uint64_t row_sum(std::size_t truth) const;
    std::uint64_t column_sum(std::size_t predicted) const;
    const std::vector<std::string>& class_names() const noexcept { return names_; }

    static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::string> names_;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes,
                          std::vector<std::string> class_names = {});

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    // Set when the corresponding denominator was zero and the value was reported as 0.
    bool degenerate_precision = false;
    bool degenerate_recall = false;
};

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

struct OverallMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

/// Accuracy = trace / total; macro F1 = unweighted mean of per-class F1.
OverallMetrics overall(const ConfusionMatrix& cm);

/// Rows and columns labelled by class, with an accuracy footer line.
std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace shmssl
