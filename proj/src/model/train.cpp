#include "tsicl/model/train.hpp"

#include "tsicl/autodiff/ops.hpp"
#include "tsicl/errors.hpp"
#include "tsicl/model/gtt.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tsicl::model {

double scheduled_learning_rate(const TrainOptions& o, std::size_t step) {
    if (o.warmup_steps > 0 && step < o.warmup_steps) {
        return o.learning_rate * static_cast<double>(step + 1) / static_cast<double>(o.warmup_steps);
    }
    const std::size_t decay_steps = o.steps > o.warmup_steps ? o.steps - o.warmup_steps : 1;
    const double progress = std::min(1.0, static_cast<double>(step - std::min(step, o.warmup_steps)) /
                                              static_cast<double>(decay_steps));
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return o.learning_rate * (o.final_lr_fraction + (1.0 - o.final_lr_fraction) * cosine);
}

double clip_gradients(Parameters& params, double max_norm) {
    double sq = 0.0;
    for (const auto& t : params.tensors()) {
        if (!t.has_grad()) continue;
        for (double g : t.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (auto& t : params.tensors()) {
            if (!t.has_grad()) continue;
            for (double& g : t.mutable_grad()) g *= factor;
        }
    }
    return norm;
}

AdamOptimizer::AdamOptimizer(const Parameters& params, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    for (const auto& t : params.tensors()) {
        m_.emplace_back(t.numel(), 0.0);
        v_.emplace_back(t.numel(), 0.0);
    }
}

void AdamOptimizer::step(Parameters& params, double learning_rate) {
    if (params.size() != m_.size()) throw ContractError("AdamOptimizer: parameter set changed size");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        ad::Tensor& p = params.tensors()[i];
        if (!p.has_grad()) continue;
        auto g = p.mutable_grad();
        auto w = p.mutable_data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            w[j] -= learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + epsilon_);
        }
    }
}

TrainResult train(const ModelConfig& config, const EpisodeSource& source, const TrainOptions& options,
                  Parameters initial) {
    config.validate();
    if (options.steps == 0 || options.batch_size == 0) throw ArgumentError("train: steps and batch_size must be positive");
    TrainResult result;
    result.params = initial.size() == 0 ? Parameters::initialize(config) : std::move(initial);
    result.params.check_against(config);
    result.params.set_requires_grad(true);
    AdamOptimizer adam(result.params, options.beta1, options.beta2, options.epsilon);

    for (std::size_t step = 0; step < options.steps; ++step) {
        result.params.zero_grad();
        double loss_sum = 0.0;
        for (std::size_t slot = 0; slot < options.batch_size; ++slot) {
            const Episode ep = source(step, slot);
            ad::Tape tape;
            const ForecastDistribution dist = forward(result.params, config, ep.targets_context, ep.covariates);
            ad::Tensor loss = gmm_nll(dist, ep.targets_horizon, options.scale_floor);
            if (options.batch_size > 1) loss = ad::scale(loss, 1.0 / static_cast<double>(options.batch_size));
            if (!std::isfinite(loss.item())) {
                throw NumericError("train: non-finite loss at step " + std::to_string(step));
            }
            loss_sum += loss.item();
            tape.backward(loss);
        }
        StepRecord rec;
        rec.step = step;
        rec.loss = loss_sum;
        rec.grad_norm = clip_gradients(result.params, options.clip_norm);
        if (!std::isfinite(rec.grad_norm)) {
            throw NumericError("train: non-finite gradient at step " + std::to_string(step));
        }
        rec.learning_rate = scheduled_learning_rate(options, step);
        adam.step(result.params, rec.learning_rate);
        result.trace.push_back(rec);
        if (options.on_step) options.on_step(rec);
    }
    result.params.zero_grad();
    result.params.set_requires_grad(false);
    return result;
}

} // namespace tsicl::model
