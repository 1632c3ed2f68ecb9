#pragma once

#include "tsicl/dsp/spectrum.hpp"

#include <filesystem>
#include <vector>

namespace tsicl::dsp {

// Recordings: headerless float32 little-endian samples, or CSV with one sample
// per line. Covariates: CSV (N rows of M comma-separated values) or binary
// with a u32 N, u32 M header followed by N*M float32 little-endian values.

std::vector<double> read_samples_f32(const std::filesystem::path& path);
void write_samples_f32(const std::filesystem::path& path, const std::vector<double>& samples);
std::vector<double> read_samples_csv(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" is text, anything else float32 binary.
std::vector<double> read_samples(const std::filesystem::path& path);

void write_covariates_bin(const std::filesystem::path& path, const CovariateMatrix& matrix);
CovariateMatrix read_covariates_bin(const std::filesystem::path& path);
void write_covariates_csv(const std::filesystem::path& path, const CovariateMatrix& matrix);
CovariateMatrix read_covariates_csv(const std::filesystem::path& path);

} // namespace tsicl::dsp
