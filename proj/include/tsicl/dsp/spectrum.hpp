#pragma once

#include "tsicl/fault_class.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace tsicl::dsp {

struct RawRecording {
    std::vector<double> samples;
    double sample_rate_hz = 48000.0;
    std::optional<FaultClass> label;
};

/// Positive-frequency magnitudes with the DC bin removed:
/// magnitudes[i] = |X[i + 1]|, i in [0, nfft/2).
struct Spectrum {
    std::vector<double> magnitudes;
    double bin_width_hz = 0.0;
};

/// N x M grid, row-major: channel i is a contiguous frequency range, step j a
/// sub-band inside it.
class CovariateMatrix {
public:
    CovariateMatrix() = default;
    CovariateMatrix(std::size_t n_channels, std::size_t n_steps, std::vector<double> values);

    [[nodiscard]] std::size_t n_channels() const { return n_channels_; }
    [[nodiscard]] std::size_t n_steps() const { return n_steps_; }
    [[nodiscard]] double at(std::size_t channel, std::size_t step) const { return values_[channel * n_steps_ + step]; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    bool operator==(const CovariateMatrix&) const = default;

private:
    std::size_t n_channels_ = 0;
    std::size_t n_steps_ = 0;
    std::vector<double> values_;
};

enum class Window { Rectangular, Hann };

/// FFT length used for a recording: largest power of two <= length.
std::size_t default_nfft(std::size_t n_samples);

Spectrum magnitude_spectrum(const RawRecording& recording, std::size_t nfft, Window window = Window::Rectangular);

/// Mean-pools the first floor(len / (N*M)) * N*M bins into N*M equal groups.
/// Entry (i, j) is group i*M + j. Throws ArgumentError if len < N*M.
CovariateMatrix band_average(const Spectrum& spectrum, std::size_t n_channels, std::size_t n_steps);

/// Per-channel z-score. Rows with standard deviation below 1e-6 become zeros.
CovariateMatrix normalize_covariates(const CovariateMatrix& matrix);

struct PreprocessOptions {
    std::size_t n_channels = 60;
    std::size_t n_steps = 64;
    Window window = Window::Rectangular;
    bool normalize = true;
};

/// Recording -> spectrum -> sub-band means -> (optionally) z-scored rows.
CovariateMatrix preprocess(const RawRecording& recording, const PreprocessOptions& options = {});

} // namespace tsicl::dsp
