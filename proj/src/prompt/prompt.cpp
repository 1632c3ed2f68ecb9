#include "tsicl/prompt/prompt.hpp"

#include "tsicl/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace tsicl::prompt {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed ^ (index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

PromptSample::PromptSample(dsp::CovariateMatrix covariates, FaultClass label)
    : covariates_(std::move(covariates)), label_(label) {
    if (!class_from_code(class_code(label))) throw ContractError("PromptSample: invalid class");
}

PromptSample PromptSample::from_target_block(dsp::CovariateMatrix covariates, std::span<const double> block) {
    const std::size_t m = covariates.n_steps();
    if (block.size() != kNumClasses * m) {
        throw ContractError("PromptSample: target block must be " + std::to_string(kNumClasses) + "x" +
                            std::to_string(m) + ", got " + std::to_string(block.size()) + " values");
    }
    std::optional<std::size_t> hot;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto row = block.subspan(c * m, m);
        const bool ones = std::all_of(row.begin(), row.end(), [](double v) { return v == 1.0; });
        const bool zeros = std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
        if (!ones && !zeros) throw ContractError("PromptSample: target row " + std::to_string(c + 1) + " is not constant 0/1");
        if (ones) {
            if (hot) throw ContractError("PromptSample: more than one active class row");
            hot = c;
        }
    }
    if (!hot) throw ContractError("PromptSample: no active class row");
    return PromptSample(std::move(covariates), class_from_index(*hot));
}

std::vector<double> PromptSample::target_block() const {
    const std::size_t m = covariates_.n_steps();
    std::vector<double> block(kNumClasses * m, 0.0);
    std::fill_n(block.begin() + static_cast<std::ptrdiff_t>(class_index(label_) * m), m, 1.0);
    return block;
}

ContextTensors build_context(std::span<const PromptSample> samples, const dsp::CovariateMatrix& query,
                             std::size_t context_steps) {
    const std::size_t n = query.n_channels();
    const std::size_t m = query.n_steps();
    const std::size_t s = samples.size();
    if (s * m != context_steps) {
        throw ContractError("build_context: " + std::to_string(s) + " samples x " + std::to_string(m) + " steps = " +
                            std::to_string(s * m) + " but the context length is " + std::to_string(context_steps));
    }
    for (const auto& sample : samples) {
        if (sample.covariates().n_channels() != n || sample.covariates().n_steps() != m) {
            throw ContractError("build_context: sample covariates " + std::to_string(sample.covariates().n_channels()) +
                                "x" + std::to_string(sample.covariates().n_steps()) + " differ from query " +
                                std::to_string(n) + "x" + std::to_string(m));
        }
    }
    const std::size_t l = context_steps;
    std::vector<double> targets(kNumClasses * l, 0.0);
    std::vector<double> covariates(n * (l + m));
    for (std::size_t k = 0; k < s; ++k) {
        const auto& cov = samples[k].covariates();
        std::fill_n(targets.begin() + static_cast<std::ptrdiff_t>(class_index(samples[k].label()) * l + k * m), m, 1.0);
        for (std::size_t c = 0; c < n; ++c) {
            std::copy_n(cov.values().begin() + static_cast<std::ptrdiff_t>(c * m), m,
                        covariates.begin() + static_cast<std::ptrdiff_t>(c * (l + m) + k * m));
        }
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::copy_n(query.values().begin() + static_cast<std::ptrdiff_t>(c * m), m,
                    covariates.begin() + static_cast<std::ptrdiff_t>(c * (l + m) + l));
    }
    return ContextTensors{ad::Tensor::from({kNumClasses, l}, std::move(targets)),
                          ad::Tensor::from({n, l + m}, std::move(covariates))};
}

ContextTensors build_context(const PromptContext& context, std::size_t context_steps) {
    return build_context(context.samples, context.query, context_steps);
}

PromptContext split_context(const ContextTensors& tensors, std::size_t m) {
    const std::size_t l = tensors.targets_context.dim(1);
    const std::size_t n = tensors.covariates.dim(0);
    if (m == 0 || l % m != 0 || tensors.covariates.dim(1) != l + m || tensors.targets_context.dim(0) != kNumClasses) {
        throw ContractError("split_context: tensor shapes do not match a prompt of " + std::to_string(m) + "-step samples");
    }
    const auto tgt = tensors.targets_context.data();
    const auto cov = tensors.covariates.data();
    auto matrix_at = [&](std::size_t offset) {
        std::vector<double> values(n * m);
        for (std::size_t c = 0; c < n; ++c) {
            std::copy_n(cov.begin() + static_cast<std::ptrdiff_t>(c * (l + m) + offset), m,
                        values.begin() + static_cast<std::ptrdiff_t>(c * m));
        }
        return dsp::CovariateMatrix(n, m, std::move(values));
    };
    PromptContext out{{}, matrix_at(l)};
    for (std::size_t k = 0; k < l / m; ++k) {
        std::vector<double> block(kNumClasses * m);
        for (std::size_t t = 0; t < kNumClasses; ++t) {
            std::copy_n(tgt.begin() + static_cast<std::ptrdiff_t>(t * l + k * m), m,
                        block.begin() + static_cast<std::ptrdiff_t>(t * m));
        }
        out.samples.push_back(PromptSample::from_target_block(matrix_at(k * m), block));
    }
    return out;
}

double ClassificationResult::intensity(FaultClass c, std::size_t step) const {
    const std::size_t m = intensities.size() / kNumClasses;
    return intensities.at(class_index(c) * m + step);
}

std::size_t winner_takes_all(std::span<const double> values) {
    if (values.empty()) throw ContractError("winner_takes_all: no values");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::vector<double> softmax(std::span<const double> values) {
    if (values.empty()) throw ContractError("softmax: no values");
    const double mx = *std::max_element(values.begin(), values.end());
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += (out[i] = std::exp(values[i] - mx));
    for (double& v : out) v /= sum;
    return out;
}

ClassificationResult classify(const model::Parameters& params, const model::ModelConfig& config,
                              const PromptContext& context) {
    if (config.n_targets != kNumClasses) {
        throw ContractError("classify: model forecasts " + std::to_string(config.n_targets) + " targets, need " +
                            std::to_string(kNumClasses));
    }
    if (context.query.n_channels() != config.n_covariates || context.query.n_steps() != config.horizon_steps) {
        throw ContractError("classify: query is " + std::to_string(context.query.n_channels()) + "x" +
                            std::to_string(context.query.n_steps()) + ", model expects " +
                            std::to_string(config.n_covariates) + "x" + std::to_string(config.horizon_steps));
    }
    const ContextTensors tensors = build_context(context, config.context_steps);
    ClassificationResult r;
    {
        ad::NoGradGuard no_grad;
        r.distribution = model::forward(params, config, tensors.targets_context, tensors.covariates);
    }
    r.intensities = model::point_forecast(r.distribution);
    const std::size_t m = config.horizon_steps;
    for (std::size_t t = 0; t < kNumClasses; ++t) r.final_intensities.push_back(r.intensities[t * m + m - 1]);
    r.predicted = class_from_index(winner_takes_all(r.final_intensities));
    r.probabilities = softmax(r.final_intensities);
    return r;
}

ContextSampler::ContextSampler(std::vector<LabeledCovariates> dataset, std::size_t samples_per_context,
                               std::uint64_t seed, QueryDraw query_draw)
    : dataset_(std::move(dataset)), by_class_(kNumClasses), samples_per_context_(samples_per_context), seed_(seed),
      query_draw_(query_draw) {
    if (samples_per_context < 5) {
        throw ArgumentError("sample_contexts: samples_per_context must be at least 5, got " +
                            std::to_string(samples_per_context));
    }
    for (std::size_t i = 0; i < dataset_.size(); ++i) by_class_[class_index(dataset_[i].label)].push_back(i);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (by_class_[c].empty()) {
            throw ArgumentError("sample_contexts: dataset has no samples of class " +
                                std::string(class_name(class_from_index(c))));
        }
    }
}

SampledContext ContextSampler::draw(std::size_t index) const {
    SampledContext out;
    out.index = index;
    out.seed = mix_seed(seed_, index);
    std::mt19937_64 rng(out.seed);

    const bool independent = query_draw_ == QueryDraw::Independent;
    std::array<std::size_t, kNumClasses> counts{};
    std::array<std::size_t, kNumClasses> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (independent) {
        // Context classes drawn one by one, so counts say nothing about the query.
        std::uniform_int_distribution<std::size_t> cls(0, kNumClasses - 1);
        for (std::size_t k = 0; k + 1 < samples_per_context_; ++k) ++counts[cls(rng)];
    } else {
        // Which classes receive the extra item when the count does not divide evenly.
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t r = 0; r < kNumClasses; ++r) {
            counts[order[r]] = samples_per_context_ / kNumClasses + (r < samples_per_context_ % kNumClasses ? 1 : 0);
        }
    }

    std::vector<std::size_t> picks;
    picks.reserve(samples_per_context_);
    std::array<std::vector<std::size_t>, kNumClasses> unused;
    for (std::size_t r = 0; r < kNumClasses; ++r) {
        const std::size_t c = order[r];
        const std::size_t count = counts[c];
        std::vector<std::size_t> pool = by_class_[c];
        if (pool.size() >= count) {
            // partial Fisher-Yates: first `count` entries become a uniform draw
            for (std::size_t k = 0; k < count; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
                std::swap(pool[k], pool[pick(rng)]);
                picks.push_back(pool[k]);
            }
            unused[c].assign(pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end());
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (std::size_t k = 0; k < count; ++k) picks.push_back(pool[pick(rng)]);
        }
    }
    std::shuffle(picks.begin(), picks.end(), rng);
    if (independent) {
        const std::size_t c = std::uniform_int_distribution<std::size_t>(0, kNumClasses - 1)(rng);
        const auto& pool = unused[c].empty() ? by_class_[c] : unused[c];
        picks.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
    }

    const auto& query = dataset_[picks.back()];
    out.truth = query.label;
    out.context.query = query.covariates;
    for (std::size_t k = 0; k + 1 < picks.size(); ++k) {
        const auto& item = dataset_[picks[k]];
        out.context.samples.emplace_back(item.covariates, item.label);
    }
    out.last_context_class = out.context.samples.back().label();
    return out;
}

std::vector<SampledContext> sample_contexts(std::vector<LabeledCovariates> dataset, std::size_t n_contexts,
                                            std::size_t samples_per_context, std::uint64_t seed) {
    const ContextSampler sampler(std::move(dataset), samples_per_context, seed);
    std::vector<SampledContext> out;
    out.reserve(n_contexts);
    for (std::size_t i = 0; i < n_contexts; ++i) out.push_back(sampler.draw(i));
    return out;
}

model::Episode to_episode(const SampledContext& sampled, std::size_t context_steps) {
    const ContextTensors t = build_context(sampled.context, context_steps);
    const PromptSample query(sampled.context.query, sampled.truth);
    return model::Episode{t.targets_context, t.covariates,
                          ad::Tensor::from({kNumClasses, sampled.context.query.n_steps()}, query.target_block())};
}

void write_intensity_csv(const std::filesystem::path& path, const ClassificationResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    const std::size_t m = result.intensities.size() / kNumClasses;
    out << "step";
    for (std::size_t t = 0; t < kNumClasses; ++t) out << ",class" << (t + 1);
    out << '\n';
    out.precision(10);
    for (std::size_t j = 0; j < m; ++j) {
        out << (j + 1);
        for (std::size_t t = 0; t < kNumClasses; ++t) out << ',' << result.intensities[t * m + j];
        out << '\n';
    }
}

} // namespace tsicl::prompt
