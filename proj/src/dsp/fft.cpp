#include "tsicl/dsp/fft.hpp"

#include "tsicl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace tsicl::dsp {

std::size_t largest_power_of_two_at_most(std::size_t length) {
    if (length == 0) return 0;
    std::size_t p = 1;
    while (p <= length / 2) p <<= 1;
    return p;
}

void fft_inplace(std::span<Complex> data) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) throw ArgumentError("fft: length " + std::to_string(n) + " is not a power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        // Twiddles computed directly per butterfly column; recurrence drift
        // would grow with n.
        std::vector<Complex> twiddle(half);
        for (std::size_t k = 0; k < half; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            twiddle[k] = Complex(std::cos(angle), std::sin(angle));
        }
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex even = data[start + k];
                const Complex odd = data[start + k + half] * twiddle[k];
                data[start + k] = even + odd;
                data[start + k + half] = even - odd;
            }
        }
    }
}

std::vector<Complex> fft(std::span<const double> signal, std::size_t nfft) {
    if (!is_power_of_two(nfft)) throw ArgumentError("fft: nfft " + std::to_string(nfft) + " is not a power of two");
    std::vector<Complex> out(nfft, Complex(0.0, 0.0));
    const std::size_t n = std::min(nfft, signal.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = Complex(signal[i], 0.0);
    fft_inplace(out);
    return out;
}

} // namespace tsicl::dsp
