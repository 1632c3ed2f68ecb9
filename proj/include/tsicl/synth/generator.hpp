#pragma once

#include "tsicl/dsp/spectrum.hpp"
#include "tsicl/fault_class.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tsicl::synth {

/// Parameters of one synthetic vibration recording.
///
/// Every class shares a base of three shaft harmonics plus white noise.
/// Bearing faults add exponentially decaying bursts that ring at
/// `resonance_hz`; the burst rate is the outer- or inner-race pass frequency.
struct SignalSpec {
    double shaft_hz = 25.0;
    double bpfo_hz = 89.0;
    double bpfi_hz = 134.0;
    double resonance_hz = 3200.0;
    double noise_floor = 0.05;
    double duration_s = 1.0;
    double sample_rate_hz = 48000.0;
    std::uint64_t seed = 0;

    double amplitude_scale = 1.0;
    double harmonic_amplitudes[3] = {0.010, 0.006, 0.004};
    double impulse_amplitude = 1.0;
    double impulse_decay_s = 0.002;

    [[nodiscard]] std::size_t n_samples() const;
    /// Throws ArgumentError; `min_samples` is typically N*M of the preprocessing.
    void validate(std::size_t min_samples = 0) const;
};

/// Deterministic in (fault, spec) including spec.seed.
dsp::RawRecording generate_recording(FaultClass fault, const SignalSpec& spec);

struct LabeledRecording {
    std::string id;
    FaultClass label;
    dsp::RawRecording recording;
};

/// Seed of item `index` within `fault`: seed XOR a mix of (class, index), so
/// items do not depend on generation order.
std::uint64_t item_seed(std::uint64_t seed, FaultClass fault, std::size_t index);

/// 4 * per_class recordings, class-major order. Each item jitters shaft speed
/// and amplitudes by up to +/-5%. `threads` > 1 generates in parallel with
/// identical output.
std::vector<LabeledRecording> generate_dataset(std::size_t per_class, const SignalSpec& spec_template,
                                               std::uint64_t seed, std::size_t threads = 1);

} // namespace tsicl::synth
