#pragma once

#include "tsicl/fault_class.hpp"

#include <cstddef>
#include <cstdint>

namespace tsicl::model {

struct ModelConfig {
    std::size_t n_covariates = 60;   // N
    std::size_t n_targets = 4;       // T
    std::size_t context_steps = 3968; // L
    std::size_t horizon_steps = 64;  // H
    std::size_t patch_size = 8;      // P
    std::size_t d_model = 64;
    std::size_t n_heads = 4;
    std::size_t n_blocks = 3;
    std::size_t n_mixture = 3; // K
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t n_channels() const { return n_covariates + n_targets; }
    [[nodiscard]] std::size_t context_patches() const { return context_steps / patch_size; }
    [[nodiscard]] std::size_t horizon_patches() const { return horizon_steps / patch_size; }
    [[nodiscard]] std::size_t total_patches() const { return context_patches() + horizon_patches(); }
    [[nodiscard]] std::size_t ffn_width() const { return 4 * d_model; }

    /// Throws ArgumentError naming the first violated constraint.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

} // namespace tsicl::model
