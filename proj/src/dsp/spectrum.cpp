#include "tsicl/dsp/spectrum.hpp"

#include "tsicl/dsp/fft.hpp"
#include "tsicl/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tsicl::dsp {

CovariateMatrix::CovariateMatrix(std::size_t n_channels, std::size_t n_steps, std::vector<double> values)
    : n_channels_(n_channels), n_steps_(n_steps), values_(std::move(values)) {
    if (values_.size() != n_channels_ * n_steps_) {
        throw DimensionError("CovariateMatrix: " + std::to_string(n_channels_) + "x" + std::to_string(n_steps_) +
                             " needs " + std::to_string(n_channels_ * n_steps_) + " values, got " +
                             std::to_string(values_.size()));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw NumericError("CovariateMatrix: non-finite entry");
    }
}

std::size_t default_nfft(std::size_t n_samples) { return largest_power_of_two_at_most(n_samples); }

Spectrum magnitude_spectrum(const RawRecording& recording, std::size_t nfft, Window window) {
    if (!(recording.sample_rate_hz > 0.0)) throw ArgumentError("magnitude_spectrum: sample rate must be positive");
    std::vector<double> frame(recording.samples.begin(),
                              recording.samples.begin() +
                                  static_cast<std::ptrdiff_t>(std::min(nfft, recording.samples.size())));
    if (window == Window::Hann) {
        const std::size_t n = frame.size();
        for (std::size_t i = 0; i < n && n > 1; ++i) {
            frame[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        }
    }
    const auto bins = fft(frame, nfft);
    Spectrum s;
    s.bin_width_hz = recording.sample_rate_hz / static_cast<double>(nfft);
    s.magnitudes.resize(nfft / 2);
    for (std::size_t i = 0; i < nfft / 2; ++i) s.magnitudes[i] = std::abs(bins[i + 1]);
    return s;
}

CovariateMatrix band_average(const Spectrum& spectrum, std::size_t n_channels, std::size_t n_steps) {
    const std::size_t groups = n_channels * n_steps;
    if (groups == 0) throw ArgumentError("band_average: n_channels and n_steps must be positive");
    const std::size_t len = spectrum.magnitudes.size();
    if (len < groups) {
        throw ArgumentError("band_average: " + std::to_string(len) + " bins cannot fill " + std::to_string(n_channels) +
                            "x" + std::to_string(n_steps) + "; need at least " + std::to_string(groups));
    }
    const std::size_t width = len / groups;
    std::vector<double> values(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        double sum = 0.0;
        for (std::size_t k = 0; k < width; ++k) sum += spectrum.magnitudes[g * width + k];
        values[g] = sum / static_cast<double>(width);
    }
    return CovariateMatrix(n_channels, n_steps, std::move(values));
}

CovariateMatrix normalize_covariates(const CovariateMatrix& matrix) {
    constexpr double kMinStd = 1e-6;
    const std::size_t n = matrix.n_channels();
    const std::size_t m = matrix.n_steps();
    std::vector<double> out(matrix.values());
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data() + i * m;
        double mean = 0.0;
        for (std::size_t j = 0; j < m; ++j) mean += row[j];
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (std::size_t j = 0; j < m; ++j) var += (row[j] - mean) * (row[j] - mean);
        const double sd = std::sqrt(var / static_cast<double>(m));
        for (std::size_t j = 0; j < m; ++j) row[j] = sd < kMinStd ? 0.0 : (row[j] - mean) / sd;
    }
    return CovariateMatrix(n, m, std::move(out));
}

CovariateMatrix preprocess(const RawRecording& recording, const PreprocessOptions& options) {
    if (options.n_channels + kNumClasses > kMaxVariates) {
        throw ArgumentError("preprocess: " + std::to_string(options.n_channels) + " channels + " +
                            std::to_string(kNumClasses) + " class targets exceed " + std::to_string(kMaxVariates) +
                            " variates");
    }
    const Spectrum spectrum = magnitude_spectrum(recording, default_nfft(recording.samples.size()), options.window);
    CovariateMatrix m = band_average(spectrum, options.n_channels, options.n_steps);
    return options.normalize ? normalize_covariates(m) : m;
}

} // namespace tsicl::dsp
