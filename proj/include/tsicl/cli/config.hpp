#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tsicl::cli {

/// Flat key=value run configuration. Every key has a default; unknown keys
/// are rejected with ArgumentError.
class RunConfig {
public:
    RunConfig();

    /// `key = value` lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path);
    void load_text(std::string_view text, std::string_view origin);
    void set(const std::string& key, const std::string& value);

    [[nodiscard]] const std::string& str(const std::string& key) const;
    [[nodiscard]] std::filesystem::path path(const std::string& key) const { return str(key); }
    [[nodiscard]] std::uint64_t u64(const std::string& key) const;
    [[nodiscard]] std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }
    [[nodiscard]] double real(const std::string& key) const;

    [[nodiscard]] static const std::vector<std::string>& keys();
    /// One `key = value` line per key, in declaration order.
    void echo(std::ostream& out) const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace tsicl::cli
