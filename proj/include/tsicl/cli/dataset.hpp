#pragma once

#include "tsicl/dsp/spectrum.hpp"
#include "tsicl/fault_class.hpp"
#include "tsicl/prompt/prompt.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tsicl::cli {

// <data_dir>/manifest.tsv            id, class, path, sample_rate_hz, n_samples
// <data_dir>/recordings/<id>.f32     float32 samples
// <data_dir>/covariates/index.tsv    id, class, path, n_channels, n_steps
// <data_dir>/covariates/<id>.cov     u32 N, u32 M, float32 values

struct ManifestEntry {
    std::string id;
    FaultClass label = FaultClass::Normal;
    std::string relpath;
    double sample_rate_hz = 0.0;
    std::size_t n_samples = 0;
    std::size_t line = 0; // 1-based line in the file it was read from
};

inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr const char* kCovariateDir = "covariates";
inline constexpr const char* kIndexName = "index.tsv";

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
/// FormatError naming the line on malformed rows, bad class codes or duplicate ids.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Fills a sibling temporary directory via `fill`, then renames it onto
/// `target`, replacing any previous contents. On failure nothing is left behind.
void write_directory_atomically(const std::filesystem::path& target,
                                const std::function<void(const std::filesystem::path&)>& fill);

/// Reads the covariate index and matrices written by the preprocess command.
std::vector<prompt::LabeledCovariates> load_covariates(const std::filesystem::path& data_dir);

} // namespace tsicl::cli
