#pragma once

#include "tsicl/autodiff/tensor.hpp"
#include "tsicl/model/config.hpp"
#include "tsicl/model/gtt.hpp"
#include "tsicl/model/parameters.hpp"

#include <functional>
#include <vector>

namespace tsicl::model {

/// One forecasting problem: known targets, covariates over context and horizon,
/// and the horizon targets the loss is scored against.
struct Episode {
    ad::Tensor targets_context; // [T, L]
    ad::Tensor covariates;      // [N, L + H]
    ad::Tensor targets_horizon; // [T, H]
};

/// Supplies the episode for (step, slot within the batch). Must be deterministic.
using EpisodeSource = std::function<Episode(std::size_t step, std::size_t slot)>;

struct StepRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0; // before clipping
    double learning_rate = 0.0;
};

struct TrainOptions {
    std::size_t steps = 300;
    std::size_t batch_size = 1;
    double learning_rate = 3e-3;
    double final_lr_fraction = 0.1; // cosine decay ends at learning_rate * this
    std::size_t warmup_steps = 10;
    double clip_norm = 1.0;
    double scale_floor = kScaleFloor; // smallest mixture scale the loss sees
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
    Parameters params;
    std::vector<StepRecord> trace;
};

/// Learning rate at `step` (0-based): linear warmup, then cosine decay.
double scheduled_learning_rate(const TrainOptions& options, std::size_t step);

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before rescaling.
double clip_gradients(Parameters& params, double max_norm);

/// Adam with bias correction. Moment buffers live here, not in the checkpoint.
class AdamOptimizer {
public:
    AdamOptimizer(const Parameters& params, double beta1, double beta2, double epsilon);

    /// Applies one update from the gradients currently held by `params`.
    void step(Parameters& params, double learning_rate);
    [[nodiscard]] std::size_t steps_taken() const { return t_; }

private:
    double beta1_, beta2_, epsilon_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// Minimizes the mixture NLL over episodes from `source`, starting from
/// `initial` (or a fresh initialization from `config.seed` when empty).
/// Throws NumericError naming the step if the loss stops being finite.
TrainResult train(const ModelConfig& config, const EpisodeSource& source, const TrainOptions& options,
                  Parameters initial = {});

} // namespace tsicl::model
