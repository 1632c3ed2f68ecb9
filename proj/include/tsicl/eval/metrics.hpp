#pragma once

#include "tsicl/fault_class.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tsicl::eval {

/// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
public:
    using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(const Counts& counts) : counts_(counts) {}

    void accumulate(FaultClass truth, FaultClass predicted);
    /// Elementwise sum; used to combine per-worker matrices.
    void merge(const ConfusionMatrix& other);

    [[nodiscard]] std::uint64_t at(FaultClass truth, FaultClass predicted) const {
        return counts_[class_index(truth)][class_index(predicted)];
    }
    [[nodiscard]] const Counts& counts() const { return counts_; }
    [[nodiscard]] std::uint64_t total() const;
    [[nodiscard]] std::uint64_t trace() const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    Counts counts_{};
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::array<ClassMetrics, kNumClasses> per_class{};
    double accuracy = 0.0;
};

/// Empty rows/columns give 0 precision/recall; F1 is 0 when both are 0.
/// Throws ContractError on an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

/// Fixed-width table: one row per true class with its counts followed by
/// precision, recall and F1; accuracy on a final line. Values at 2 decimals.
std::string render_table(const MetricsReport& report, const ConfusionMatrix& cm);

/// CSV: "class,precision,recall,f1", one row per class, then "accuracy,<value>".
std::string render_csv(const MetricsReport& report);

void write_text(const std::filesystem::path& path, std::string_view text);

} // namespace tsicl::eval
