#include "tsicl/cli/config.hpp"

#include "tsicl/errors.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

namespace tsicl::cli {

namespace {

const std::vector<std::pair<std::string, std::string>>& defaults() {
    static const std::vector<std::pair<std::string, std::string>> d = {
        {"seed", "0"},
        {"threads", "1"},
        {"data_dir", "data"},
        {"train_data_dir", ""},
        {"out", "out"},
        {"checkpoint", "model.gttd"},
        // synthetic data
        {"per_class", "70"},
        {"sample_rate_hz", "48000"},
        {"duration_s", "1.0"},
        {"shaft_hz", "25"},
        {"bpfo_hz", "89"},
        {"bpfi_hz", "134"},
        {"resonance_hz", "3200"},
        {"noise_floor", "0.05"},
        // preprocessing
        {"n_channels", "60"},
        {"sub_bands", "64"},
        {"window", "rectangular"},
        // prompts
        {"samples_per_context", "63"},
        {"n_contexts", "1000"},
        {"train_samples_per_context", "0"},
        {"train_query_draw", "trailing"},
        // model
        {"patch_size", "64"},
        {"d_model", "64"},
        {"n_heads", "4"},
        {"n_blocks", "3"},
        {"n_mixture", "3"},
        // training
        {"steps", "2000"},
        {"batch_size", "1"},
        {"learning_rate", "0.003"},
        {"warmup_steps", "10"},
        {"scale_floor", "0.3"},
    };
    return d;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

RunConfig::RunConfig() {
    for (const auto& [k, v] : defaults()) values_[k] = v;
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& kv : defaults()) out.push_back(kv.first);
        return out;
    }();
    return k;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path.string());
}

void RunConfig::load_text(std::string_view text, std::string_view origin) {
    std::size_t lineno = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string where = std::string(origin) + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos) throw ArgumentError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!values_.contains(key)) throw ArgumentError(where + ": unknown key '" + key + "'");
        values_[key] = trim(line.substr(eq + 1));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.contains(key)) throw ArgumentError("unknown config key '" + key + "'");
    values_[key] = value;
}

const std::string& RunConfig::str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError("unknown config key '" + key + "'");
    return it->second;
}

std::uint64_t RunConfig::u64(const std::string& key) const {
    const std::string& s = str(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ArgumentError("config key '" + key + "': expected a nonnegative integer, got '" + s + "'");
    }
    return v;
}

double RunConfig::real(const std::string& key) const {
    const std::string& s = str(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ArgumentError("config key '" + key + "': expected a number, got '" + s + "'");
    }
    return v;
}

void RunConfig::echo(std::ostream& out) const {
    for (const auto& key : keys()) out << key << " = " << values_.at(key) << '\n';
}

} // namespace tsicl::cli
