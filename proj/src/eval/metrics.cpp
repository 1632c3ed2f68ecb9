#include "tsicl/eval/metrics.hpp"

#include "tsicl/errors.hpp"

#include <cstdio>
#include <fstream>

namespace tsicl::eval {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

void ConfusionMatrix::accumulate(FaultClass truth, FaultClass predicted) {
    ++counts_[class_index(truth)][class_index(predicted)];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    for (std::size_t i = 0; i < kNumClasses; ++i)
        for (std::size_t j = 0; j < kNumClasses; ++j) counts_[i][j] += other.counts_[i][j];
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts_)
        for (auto v : row) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) t += counts_[i][i];
    return t;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ContractError("compute_metrics: confusion matrix is empty");
    const auto& c = cm.counts();
    MetricsReport r;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t j = 0; j < kNumClasses; ++j) {
            row += c[k][j];
            col += c[j][k];
        }
        auto& m = r.per_class[k];
        m.precision = ratio(c[k][k], col);
        m.recall = ratio(c[k][k], row);
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    }
    r.accuracy = ratio(cm.trace(), cm.total());
    return r;
}

std::string render_table(const MetricsReport& report, const ConfusionMatrix& cm) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s", "true\\pred");
    out += line;
    for (auto c : kAllClasses) {
        std::snprintf(line, sizeof line, " %8d", class_code(c));
        out += line;
    }
    std::snprintf(line, sizeof line, " %9s %9s %9s\n", "precision", "recall", "f1");
    out += line;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        const FaultClass truth = class_from_index(k);
        std::snprintf(line, sizeof line, "%-14s", std::string(class_name(truth)).c_str());
        out += line;
        for (auto p : kAllClasses) {
            std::snprintf(line, sizeof line, " %8llu", static_cast<unsigned long long>(cm.at(truth, p)));
            out += line;
        }
        const auto& m = report.per_class[k];
        std::snprintf(line, sizeof line, " %9s %9s %9s\n", fixed2(m.precision).c_str(), fixed2(m.recall).c_str(),
                      fixed2(m.f1).c_str());
        out += line;
    }
    std::snprintf(line, sizeof line, "%-14s %8s\n", "accuracy", fixed2(report.accuracy).c_str());
    out += line;
    std::snprintf(line, sizeof line, "%-14s %8llu\n", "total", static_cast<unsigned long long>(cm.total()));
    out += line;
    return out;
}

std::string render_csv(const MetricsReport& report) {
    std::string out = "class,precision,recall,f1\n";
    char line[160];
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        const auto& m = report.per_class[k];
        std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", class_code(class_from_index(k)), m.precision, m.recall,
                      m.f1);
        out += line;
    }
    std::snprintf(line, sizeof line, "accuracy,%.6f\n", report.accuracy);
    out += line;
    return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

} // namespace tsicl::eval
