#include "tsicl/synth/generator.hpp"

#include "tsicl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <thread>

namespace tsicl::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kJitter = 0.05;
constexpr double kSandNoiseFactor = 4.0;
constexpr double kInnerModulationDepth = 0.5;
constexpr double kBurstLengthInDecays = 10.0;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void add_bursts(std::vector<double>& x, const SignalSpec& s, double rate_hz, bool modulated, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double first = unit(rng) / rate_hz;
    const double mod_phase = kTwoPi * unit(rng);
    const double fs = s.sample_rate_hz;
    const auto burst_len = static_cast<std::size_t>(kBurstLengthInDecays * s.impulse_decay_s * fs);
    const double amp = s.impulse_amplitude * s.amplitude_scale;
    for (std::size_t k = 0;; ++k) {
        const double tk = first + static_cast<double>(k) / rate_hz;
        const auto i0 = static_cast<std::size_t>(std::ceil(tk * fs));
        if (i0 >= x.size()) break;
        double a = amp;
        if (modulated) {
            a *= (1.0 + kInnerModulationDepth * std::cos(kTwoPi * s.shaft_hz * tk + mod_phase)) /
                 (1.0 + kInnerModulationDepth);
        }
        for (std::size_t i = i0; i < std::min(x.size(), i0 + burst_len); ++i) {
            const double dt = static_cast<double>(i) / fs - tk;
            x[i] += a * std::exp(-dt / s.impulse_decay_s) * std::sin(kTwoPi * s.resonance_hz * dt);
        }
    }
}

} // namespace

std::size_t SignalSpec::n_samples() const { return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz)); }

void SignalSpec::validate(std::size_t min_samples) const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string("signal spec: ") + name + " must be positive");
    };
    positive(shaft_hz, "shaft_hz");
    positive(bpfo_hz, "bpfo_hz");
    positive(bpfi_hz, "bpfi_hz");
    positive(resonance_hz, "resonance_hz");
    positive(duration_s, "duration_s");
    positive(sample_rate_hz, "sample_rate_hz");
    positive(impulse_decay_s, "impulse_decay_s");
    if (!(noise_floor >= 0.0)) throw ArgumentError("signal spec: noise_floor must be nonnegative");
    if (bpfo_hz == bpfi_hz) throw ArgumentError("signal spec: bpfo_hz and bpfi_hz must differ");
    if (!(resonance_hz < sample_rate_hz / 2.0)) throw ArgumentError("signal spec: resonance_hz must be below Nyquist");
    if (n_samples() < std::max<std::size_t>(min_samples, 1)) {
        throw ArgumentError("signal spec: " + std::to_string(n_samples()) + " samples, need at least " +
                            std::to_string(min_samples));
    }
}

dsp::RawRecording generate_recording(FaultClass fault, const SignalSpec& s) {
    s.validate();
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t n = s.n_samples();
    const double fs = s.sample_rate_hz;
    std::vector<double> x(n, 0.0);

    double phase[3];
    for (double& p : phase) p = kTwoPi * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        double v = 0.0;
        for (int h = 0; h < 3; ++h) {
            v += s.harmonic_amplitudes[h] * std::sin(kTwoPi * (h + 1) * s.shaft_hz * t + phase[h]);
        }
        x[i] = s.amplitude_scale * v;
    }
    const double noise = s.noise_floor * (fault == FaultClass::SandBearing ? kSandNoiseFactor : 1.0);
    for (double& v : x) v += noise * normal(rng);

    if (fault == FaultClass::OuterRing) add_bursts(x, s, s.bpfo_hz, false, rng);
    if (fault == FaultClass::InnerRing) add_bursts(x, s, s.bpfi_hz, true, rng);

    return dsp::RawRecording{std::move(x), fs, fault};
}

std::uint64_t item_seed(std::uint64_t seed, FaultClass fault, std::size_t index) {
    return seed ^ splitmix64((static_cast<std::uint64_t>(class_code(fault)) << 32) ^ static_cast<std::uint64_t>(index));
}

std::vector<LabeledRecording> generate_dataset(std::size_t per_class, const SignalSpec& spec_template,
                                               std::uint64_t seed, std::size_t threads) {
    if (per_class == 0) throw ArgumentError("generate_dataset: per_class must be at least 1");
    spec_template.validate();
    std::vector<LabeledRecording> out(kNumClasses * per_class);

    auto make = [&](std::size_t slot) {
        const FaultClass fault = kAllClasses[slot / per_class];
        const std::size_t index = slot % per_class;
        std::mt19937_64 rng(item_seed(seed, fault, index));
        std::uniform_real_distribution<double> jitter(-kJitter, kJitter);
        SignalSpec s = spec_template;
        s.shaft_hz *= 1.0 + jitter(rng);
        s.amplitude_scale *= 1.0 + jitter(rng);
        s.seed = rng();
        char id[32];
        std::snprintf(id, sizeof id, "c%d_%04zu", class_code(fault), index);
        out[slot] = LabeledRecording{id, fault, generate_recording(fault, s)};
    };

    threads = std::max<std::size_t>(1, std::min(threads, out.size()));
    if (threads == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) make(i);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < out.size(); i += threads) make(i);
            });
        }
    }
    return out;
}

} // namespace tsicl::synth
