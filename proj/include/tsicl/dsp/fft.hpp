#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tsicl::dsp {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Largest power of two not exceeding `length` (0 for an empty signal).
std::size_t largest_power_of_two_at_most(std::size_t length);

/// Iterative radix-2 decimation-in-time FFT of a real signal.
/// The first `nfft` samples are used; shorter signals are zero-padded.
/// Throws ArgumentError unless nfft is a power of two.
std::vector<Complex> fft(std::span<const double> signal, std::size_t nfft);

/// In-place complex transform; `data.size()` must be a power of two.
void fft_inplace(std::span<Complex> data);

} // namespace tsicl::dsp
