#include "tsicl/cli/dataset.hpp"

#include "tsicl/dsp/io.hpp"
#include "tsicl/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tsicl::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) out.push_back(cell);
    if (!line.empty() && line.back() == '\t') out.emplace_back();
    return out;
}

template <typename T>
T parse_field(const std::string& s, const std::string& where, const char* what) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError(where + ": bad " + what + " '" + s + "'");
    }
    return v;
}

std::vector<std::vector<std::string>> read_table(const fs::path& path, std::size_t columns,
                                                 std::vector<std::size_t>& lines) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 || line.empty()) continue; // header
        auto cells = split_tabs(line);
        if (cells.size() != columns) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                              " tab-separated fields, got " + std::to_string(cells.size()));
        }
        rows.push_back(std::move(cells));
        lines.push_back(lineno);
    }
    if (lineno == 0) throw FormatError(path.string() + ": empty file");
    return rows;
}

FaultClass parse_class(const std::string& s, const std::string& where) {
    const auto code = class_from_code(parse_field<int>(s, where, "class code"));
    if (!code) throw FormatError(where + ": class code must be 1-4, got '" + s + "'");
    return *code;
}

} // namespace

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id\tclass\tpath\tsample_rate_hz\tn_samples\n";
    char rate[64];
    for (const auto& e : entries) {
        std::snprintf(rate, sizeof rate, "%.17g", e.sample_rate_hz);
        out << e.id << '\t' << class_code(e.label) << '\t' << e.relpath << '\t' << rate << '\t' << e.n_samples << '\n';
    }
    if (!out) throw DataError("write failed for " + path.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::vector<std::size_t> lines;
    const auto rows = read_table(path, 5, lines);
    std::vector<ManifestEntry> out;
    std::set<std::string> ids;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string where = path.string() + ":" + std::to_string(lines[r]);
        const auto& c = rows[r];
        ManifestEntry e;
        e.id = c[0];
        if (e.id.empty() || !ids.insert(e.id).second) throw FormatError(where + ": empty or duplicate id '" + e.id + "'");
        e.label = parse_class(c[1], where);
        e.relpath = c[2];
        e.sample_rate_hz = parse_field<double>(c[3], where, "sample rate");
        e.n_samples = parse_field<std::size_t>(c[4], where, "sample count");
        e.line = lines[r];
        out.push_back(std::move(e));
    }
    return out;
}

void write_directory_atomically(const fs::path& target, const std::function<void(const fs::path&)>& fill) {
    const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
    fs::create_directories(parent);
    const fs::path staging = parent / ("." + target.filename().string() + ".partial");
    const fs::path retired = parent / ("." + target.filename().string() + ".old");
    fs::remove_all(staging);
    fs::remove_all(retired);
    fs::create_directory(staging);
    try {
        fill(staging);
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }
    if (fs::exists(target)) fs::rename(target, retired);
    fs::rename(staging, target);
    fs::remove_all(retired);
}

std::vector<prompt::LabeledCovariates> load_covariates(const fs::path& data_dir) {
    const fs::path index = data_dir / kCovariateDir / kIndexName;
    if (!fs::exists(index)) throw DataError(index.string() + " not found; run preprocess first");
    std::vector<std::size_t> lines;
    const auto rows = read_table(index, 5, lines);
    std::vector<prompt::LabeledCovariates> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string where = index.string() + ":" + std::to_string(lines[r]);
        const fs::path file = data_dir / kCovariateDir / rows[r][2];
        if (!fs::exists(file)) throw DataError(where + ": covariate file " + file.string() + " not found");
        auto m = dsp::read_covariates_bin(file);
        if (m.n_channels() != parse_field<std::size_t>(rows[r][3], where, "channel count") ||
            m.n_steps() != parse_field<std::size_t>(rows[r][4], where, "step count")) {
            throw CorruptionError(where + ": " + file.string() + " does not match the declared shape");
        }
        out.push_back({std::move(m), parse_class(rows[r][1], where)});
    }
    if (out.empty()) throw DataError(index.string() + ": no entries");
    return out;
}

} // namespace tsicl::cli
