#pragma once

#include "tsicl/autodiff/tensor.hpp"
#include "tsicl/dsp/spectrum.hpp"
#include "tsicl/fault_class.hpp"
#include "tsicl/model/config.hpp"
#include "tsicl/model/gtt.hpp"
#include "tsicl/model/parameters.hpp"
#include "tsicl/model/train.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tsicl::prompt {

/// A labeled covariate matrix. Its target block (T x M, row `label` all ones,
/// every other row zero) is derived from the label, so it is always one-hot.
class PromptSample {
public:
    PromptSample(dsp::CovariateMatrix covariates, FaultClass label);

    /// Accepts an explicit target block; throws ContractError unless exactly
    /// one row is all ones and the rest all zeros.
    static PromptSample from_target_block(dsp::CovariateMatrix covariates, std::span<const double> block);

    [[nodiscard]] const dsp::CovariateMatrix& covariates() const { return covariates_; }
    [[nodiscard]] FaultClass label() const { return label_; }
    [[nodiscard]] std::vector<double> target_block() const;

private:
    dsp::CovariateMatrix covariates_;
    FaultClass label_;
};

struct PromptContext {
    std::vector<PromptSample> samples;
    dsp::CovariateMatrix query;
};

/// Model inputs for one prompt.
struct ContextTensors {
    ad::Tensor targets_context; // [T, S*M]
    ad::Tensor covariates;      // [N, S*M + M]
};

/// Concatenates sample target blocks and covariates along time; the query's
/// covariates fill the forecast horizon. Throws ContractError unless
/// S * M == context_steps and all shapes agree.
ContextTensors build_context(std::span<const PromptSample> samples, const dsp::CovariateMatrix& query,
                             std::size_t context_steps);
ContextTensors build_context(const PromptContext& context, std::size_t context_steps);

/// Inverse of build_context for `n_steps`-wide samples.
PromptContext split_context(const ContextTensors& tensors, std::size_t n_steps);

struct ClassificationResult {
    std::vector<double> intensities;       // [T, M] point forecast, row per class
    std::vector<double> final_intensities; // [T] at the last horizon step
    FaultClass predicted = FaultClass::Normal;
    std::vector<double> probabilities; // softmax of final_intensities
    model::ForecastDistribution distribution;

    [[nodiscard]] double intensity(FaultClass c, std::size_t step) const;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t winner_takes_all(std::span<const double> values);

std::vector<double> softmax(std::span<const double> values);

/// Runs the forecaster on the prompt and reads the class off the final step.
ClassificationResult classify(const model::Parameters& params, const model::ModelConfig& config,
                              const PromptContext& context);

/// Labeled covariates available for drawing prompts.
struct LabeledCovariates {
    dsp::CovariateMatrix covariates;
    FaultClass label;
};

struct SampledContext {
    std::size_t index = 0;
    std::uint64_t seed = 0; // per-context seed the draw was made from
    PromptContext context;
    FaultClass truth = FaultClass::Normal;
    FaultClass last_context_class = FaultClass::Normal;
};

/// How the query relates to the balanced draw.
/// Trailing: the query is the last item of the balanced, shuffled draw, so the
/// context class counts hint at its label.
/// Independent: every context item and the query draw their class uniformly
/// and independently, so counting context labels reveals nothing.
enum class QueryDraw { Trailing, Independent };

/// Draws prompts of `samples_per_context` items (context samples plus the
/// query). Trailing draws keep class counts within one of each other; items
/// are drawn uniformly inside each class without replacement where the class
/// is large enough; the context order is shuffled. Each prompt depends only
/// on (seed, index).
class ContextSampler {
public:
    ContextSampler(std::vector<LabeledCovariates> dataset, std::size_t samples_per_context, std::uint64_t seed,
                   QueryDraw query_draw = QueryDraw::Trailing);

    [[nodiscard]] SampledContext draw(std::size_t index) const;
    [[nodiscard]] std::size_t samples_per_context() const { return samples_per_context_; }

private:
    std::vector<LabeledCovariates> dataset_;
    std::vector<std::vector<std::size_t>> by_class_;
    std::size_t samples_per_context_;
    std::uint64_t seed_;
    QueryDraw query_draw_;
};

std::vector<SampledContext> sample_contexts(std::vector<LabeledCovariates> dataset, std::size_t n_contexts,
                                            std::size_t samples_per_context, std::uint64_t seed);

/// Training episode: the query's one-hot block is the horizon target.
model::Episode to_episode(const SampledContext& sampled, std::size_t context_steps);

/// CSV with header "step,class1,...,classT" and one row per horizon step (1-based).
void write_intensity_csv(const std::filesystem::path& path, const ClassificationResult& result);

} // namespace tsicl::prompt
