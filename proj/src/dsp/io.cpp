#include "tsicl/dsp/io.hpp"

#include "tsicl/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace tsicl::dsp {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<std::uint8_t>& b, double v) { put_u32(b, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

double get_f32(const std::uint8_t* p) { return static_cast<double>(std::bit_cast<float>(get_u32(p))); }

double parse_real(std::string_view text, const std::filesystem::path& path, std::size_t line) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw FormatError(path.string() + ":" + std::to_string(line) + ": not a number: '" + std::string(text) + "'");
    }
    return v;
}

} // namespace

std::vector<double> read_samples_f32(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() % 4 != 0) throw CorruptionError(path.string() + ": size is not a multiple of 4 bytes");
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_f32(bytes.data() + 4 * i);
    return out;
}

void write_samples_f32(const std::filesystem::path& path, const std::vector<double>& samples) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(samples.size() * 4);
    for (double v : samples) put_f32(bytes, v);
    write_bytes(path, bytes);
}

std::vector<double> read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        out.push_back(parse_real(line, path, lineno));
    }
    return out;
}

std::vector<double> read_samples(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? read_samples_csv(path) : read_samples_f32(path);
}

void write_covariates_bin(const std::filesystem::path& path, const CovariateMatrix& matrix) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(8 + matrix.values().size() * 4);
    put_u32(bytes, static_cast<std::uint32_t>(matrix.n_channels()));
    put_u32(bytes, static_cast<std::uint32_t>(matrix.n_steps()));
    for (double v : matrix.values()) put_f32(bytes, v);
    write_bytes(path, bytes);
}

CovariateMatrix read_covariates_bin(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() < 8) throw CorruptionError(path.string() + ": missing covariate header");
    const std::size_t n = get_u32(bytes.data());
    const std::size_t m = get_u32(bytes.data() + 4);
    if (bytes.size() != 8 + 4 * n * m) {
        throw CorruptionError(path.string() + ": header declares " + std::to_string(n) + "x" + std::to_string(m) +
                              " but payload has " + std::to_string(bytes.size() - 8) + " bytes");
    }
    std::vector<double> values(n * m);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f32(bytes.data() + 8 + 4 * i);
    return CovariateMatrix(n, m, std::move(values));
}

void write_covariates_csv(const std::filesystem::path& path, const CovariateMatrix& matrix) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.precision(17);
    for (std::size_t i = 0; i < matrix.n_channels(); ++i) {
        for (std::size_t j = 0; j < matrix.n_steps(); ++j) {
            if (j) out << ',';
            out << matrix.at(i, j);
        }
        out << '\n';
    }
}

CovariateMatrix read_covariates_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++rows;
        std::size_t count = 0;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            values.push_back(parse_real(cell, path, rows));
            ++count;
        }
        if (rows == 1) cols = count;
        if (count != cols) {
            throw FormatError(path.string() + ":" + std::to_string(rows) + ": expected " + std::to_string(cols) +
                              " columns, got " + std::to_string(count));
        }
    }
    return CovariateMatrix(rows, cols, std::move(values));
}

} // namespace tsicl::dsp
