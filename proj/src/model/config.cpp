#include "tsicl/model/config.hpp"

#include "tsicl/errors.hpp"

#include <string>

namespace tsicl::model {

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw ArgumentError("model config: " + what); };
    if (n_covariates == 0) fail("n_covariates must be positive");
    if (n_targets == 0) fail("n_targets must be positive");
    if (n_channels() > kMaxVariates) {
        fail(std::to_string(n_covariates) + " covariates + " + std::to_string(n_targets) + " targets = " +
             std::to_string(n_channels()) + " variates exceeds the limit of " + std::to_string(kMaxVariates));
    }
    if (patch_size == 0) fail("patch_size must be positive");
    if (context_steps == 0 || context_steps % patch_size != 0) {
        fail("context_steps " + std::to_string(context_steps) + " must be a positive multiple of patch_size " +
             std::to_string(patch_size));
    }
    if (horizon_steps == 0 || horizon_steps % patch_size != 0) {
        fail("horizon_steps " + std::to_string(horizon_steps) + " must be a positive multiple of patch_size " +
             std::to_string(patch_size));
    }
    if (context_steps % horizon_steps != 0) {
        fail("context_steps " + std::to_string(context_steps) + " must be a multiple of horizon_steps " +
             std::to_string(horizon_steps));
    }
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
        fail("d_model " + std::to_string(d_model) + " must be divisible by n_heads " + std::to_string(n_heads));
    }
    if (n_blocks == 0) fail("n_blocks must be positive");
    if (n_mixture == 0) fail("n_mixture must be at least 1");
}

} // namespace tsicl::model
