#pragma once

#include "tsicl/autodiff/tensor.hpp"
#include "tsicl/model/config.hpp"
#include "tsicl/model/parameters.hpp"

#include <vector>

namespace tsicl::model {

inline constexpr double kScaleFloor = 1e-4;

/// Gaussian mixture per target channel and horizon step; every block is [T, H, K].
struct ForecastDistribution {
    ad::Tensor weights;
    ad::Tensor log_weights;
    ad::Tensor means;
    ad::Tensor scales;

    [[nodiscard]] std::size_t n_targets() const { return means.dim(0); }
    [[nodiscard]] std::size_t horizon() const { return means.dim(1); }
    [[nodiscard]] std::size_t n_mixture() const { return means.dim(2); }
};

struct ForwardOptions {
    /// Run the last encoder block over every patch instead of only the horizon
    /// patches. Results are identical; this exists to check that claim.
    bool full_last_block = false;
};

/// Probabilistic forecast of the target horizon.
///
/// `targets_context` is [T, L] (row-major), `covariates` is [N, L + H]. Target
/// horizon patches are replaced by the learnable sink embedding.
ForecastDistribution forward(const Parameters& params, const ModelConfig& config, const ad::Tensor& targets_context,
                             const ad::Tensor& covariates, ForwardOptions options = {});

/// Mean negative log-likelihood of `targets_horizon` ([T, H]) under `dist`,
/// evaluated in log space. Component scales below `min_scale` are raised to it.
ad::Tensor gmm_nll(const ForecastDistribution& dist, const ad::Tensor& targets_horizon, double min_scale = kScaleFloor);

/// Mixture mean per (target, step): the prediction intensity, [T, H].
std::vector<double> point_forecast(const ForecastDistribution& dist);

} // namespace tsicl::model
