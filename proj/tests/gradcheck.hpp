#pragma once

#include "tsicl/autodiff/ops.hpp"
#include "tsicl/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace tsicl::testing {

inline ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(ad::numel_of(shape));
    for (double& x : v) x = u(rng);
    return ad::Tensor::from(std::move(shape), std::move(v));
}

/// |a - b| / max(|a|, |b|, floor): relative where gradients are O(1), absolute
/// where both are tiny and finite-difference noise dominates.
inline double rel_err(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest elementwise error between the reverse-mode gradient of `loss_fn`
/// w.r.t. `inputs[which]` and central differences with step `h`.
inline double max_grad_error(const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& loss_fn,
                             std::vector<ad::Tensor> inputs, std::size_t which, double h = 1e-4) {
    for (auto& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    std::vector<double> analytic;
    {
        ad::Tape tape;
        const ad::Tensor loss = loss_fn(inputs);
        tape.backward(loss);
        analytic = inputs[which].grad();
    }
    double worst = 0.0;
    ad::NoGradGuard guard;
    auto values = inputs[which].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + h;
        const double up = loss_fn(inputs).item();
        values[i] = saved - h;
        const double down = loss_fn(inputs).item();
        values[i] = saved;
        worst = std::max(worst, rel_err(analytic[i], (up - down) / (2.0 * h)));
    }
    return worst;
}

/// sum(f(x) * r) with a fixed random weighting r so every output element matters.
inline ad::Tensor weighted_sum(const ad::Tensor& y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    return ad::sum_all(ad::mul(y, random_tensor(y.shape(), rng)));
}

} // namespace tsicl::testing
