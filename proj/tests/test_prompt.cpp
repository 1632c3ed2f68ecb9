#include "tsicl/errors.hpp"
#include "tsicl/prompt/prompt.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <unistd.h>

using namespace tsicl;

namespace {

dsp::CovariateMatrix random_matrix(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(n * m);
    for (double& x : v) x = z(rng);
    return dsp::CovariateMatrix(n, m, std::move(v));
}

// Each matrix is filled with a value encoding its dataset index, so draws can be traced.
std::vector<prompt::LabeledCovariates> tagged_dataset(const std::array<std::size_t, 4>& per_class, std::size_t n = 2,
                                                      std::size_t m = 4) {
    std::vector<prompt::LabeledCovariates> out;
    for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t k = 0; k < per_class[c]; ++k) {
            const double tag = static_cast<double>(out.size());
            out.push_back({dsp::CovariateMatrix(n, m, std::vector<double>(n * m, tag)), class_from_index(c)});
        }
    }
    return out;
}

std::size_t tag_of(const dsp::CovariateMatrix& m) { return static_cast<std::size_t>(m.values()[0]); }

model::ModelConfig small_classifier_config() {
    model::ModelConfig c;
    c.n_covariates = 2;
    c.n_targets = 4;
    c.horizon_steps = 4;
    c.context_steps = 4 * 4; // 5 samples per context
    c.patch_size = 2;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_blocks = 1;
    c.n_mixture = 2;
    return c;
}

} // namespace

TEST(BuildContext, PaperGeometry) {
    std::mt19937_64 rng(1);
    std::vector<prompt::PromptSample> samples;
    for (std::size_t k = 0; k < 62; ++k) samples.emplace_back(random_matrix(60, 64, rng), class_from_index(k % 4));
    const auto query = random_matrix(60, 64, rng);
    const auto t = prompt::build_context(samples, query, 3968);
    EXPECT_EQ(t.targets_context.shape(), (ad::Shape{4, 3968}));
    EXPECT_EQ(t.covariates.shape(), (ad::Shape{60, 4032}));
}

TEST(BuildContext, LayoutMatchesSamples) {
    std::mt19937_64 rng(2);
    std::vector<prompt::PromptSample> samples;
    samples.emplace_back(random_matrix(3, 4, rng), FaultClass::SandBearing);
    samples.emplace_back(random_matrix(3, 4, rng), FaultClass::Normal);
    const auto query = random_matrix(3, 4, rng);
    const auto t = prompt::build_context(samples, query, 8);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(t.targets_context.at({2, j}), 1.0);
        EXPECT_EQ(t.targets_context.at({0, j}), 0.0);
        EXPECT_EQ(t.targets_context.at({0, 4 + j}), 1.0);
        EXPECT_EQ(t.targets_context.at({2, 4 + j}), 0.0);
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_EQ(t.covariates.at({c, j}), samples[0].covariates().at(c, j));
            EXPECT_EQ(t.covariates.at({c, 4 + j}), samples[1].covariates().at(c, j));
            EXPECT_EQ(t.covariates.at({c, 8 + j}), query.at(c, j));
        }
    }
}

TEST(BuildContext, LengthMismatchIsContractError) {
    std::mt19937_64 rng(3);
    std::vector<prompt::PromptSample> samples;
    for (int k = 0; k < 61; ++k) samples.emplace_back(random_matrix(2, 64, rng), FaultClass::Normal);
    try {
        (void)prompt::build_context(samples, random_matrix(2, 64, rng), 3968);
        FAIL() << "expected ContractError";
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("61"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("3968"), std::string::npos);
    }
    samples.emplace_back(random_matrix(3, 64, rng), FaultClass::Normal);
    EXPECT_THROW((void)prompt::build_context(samples, random_matrix(2, 64, rng), 3968), ContractError);
}

TEST(BuildContext, SplitIsInverse) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        prompt::PromptContext ctx{{}, random_matrix(5, 8, rng)};
        for (int k = 0; k < 6; ++k) ctx.samples.emplace_back(random_matrix(5, 8, rng), class_from_index(rng() % 4));
        const auto back = prompt::split_context(prompt::build_context(ctx, 48), 8);
        ASSERT_EQ(back.samples.size(), 6u);
        EXPECT_EQ(back.query.values(), ctx.query.values());
        for (std::size_t k = 0; k < 6; ++k) {
            EXPECT_EQ(back.samples[k].label(), ctx.samples[k].label());
            EXPECT_EQ(back.samples[k].covariates().values(), ctx.samples[k].covariates().values());
        }
    }
}

TEST(PromptSample, TargetBlockIsOneHot) {
    std::mt19937_64 rng(5);
    const prompt::PromptSample s(random_matrix(2, 3, rng), FaultClass::InnerRing);
    EXPECT_EQ(s.target_block(), (std::vector<double>{0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1}));
}

TEST(PromptSample, RejectsNonOneHotBlocks) {
    std::mt19937_64 rng(6);
    const auto m = random_matrix(2, 2, rng);
    EXPECT_NO_THROW((void)prompt::PromptSample::from_target_block(m, std::vector<double>{0, 0, 1, 1, 0, 0, 0, 0}));
    EXPECT_THROW((void)prompt::PromptSample::from_target_block(m, std::vector<double>{1, 1, 1, 1, 0, 0, 0, 0}),
                 ContractError);
    EXPECT_THROW((void)prompt::PromptSample::from_target_block(m, std::vector<double>{0, 0, 0, 0, 0, 0, 0, 0}),
                 ContractError);
    EXPECT_THROW((void)prompt::PromptSample::from_target_block(m, std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0}),
                 ContractError);
    EXPECT_THROW((void)prompt::PromptSample::from_target_block(m, std::vector<double>{0.5, 0.5, 0, 0, 0, 0, 0, 0}),
                 ContractError);
    EXPECT_THROW((void)prompt::PromptSample::from_target_block(m, std::vector<double>{1, 1, 0, 0}), ContractError);
}

TEST(WinnerTakesAll, PicksLargestLowestOnTies) {
    EXPECT_EQ(prompt::winner_takes_all(std::vector<double>{0.1, 0.9, 0.3, 0.2}), 1u);
    EXPECT_EQ(prompt::winner_takes_all(std::vector<double>{0.5, 0.5, 0.5, 0.5}), 0u);
    EXPECT_EQ(prompt::winner_takes_all(std::vector<double>{0.1, 0.7, 0.7, 0.2}), 1u);
    EXPECT_THROW((void)prompt::winner_takes_all(std::vector<double>{}), ContractError);
}

TEST(WinnerTakesAll, InvariantUnderMonotoneTransforms) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::uniform_real_distribution<double> a(0.1, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(4);
        for (double& x : v) x = u(rng);
        const auto base = prompt::winner_takes_all(v);
        const double scale = a(rng), shift = u(rng);
        std::vector<double> affine(4), cubed(4), expd(4);
        for (std::size_t i = 0; i < 4; ++i) {
            affine[i] = scale * v[i] + shift;
            cubed[i] = v[i] * v[i] * v[i];
            expd[i] = std::exp(v[i]);
        }
        EXPECT_EQ(prompt::winner_takes_all(affine), base);
        EXPECT_EQ(prompt::winner_takes_all(cubed), base);
        EXPECT_EQ(prompt::winner_takes_all(expd), base);
        EXPECT_EQ(prompt::winner_takes_all(prompt::softmax(v)), base);
    }
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
    const auto p = prompt::softmax(std::vector<double>{1000.0, 1000.0, 999.0, -5.0});
    double s = 0.0;
    for (double x : p) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(p[0], p[1]);
    EXPECT_NEAR(p[0] / p[2], std::exp(1.0), 1e-9);
}

TEST(Sampler, BalancedClassesNoRepeatsQueryLast) {
    const auto data = tagged_dataset({70, 70, 70, 70});
    const prompt::ContextSampler sampler(data, 63, 11);
    for (std::size_t i = 0; i < 100; ++i) {
        const auto s = sampler.draw(i);
        ASSERT_EQ(s.context.samples.size(), 62u);
        std::map<FaultClass, int> counts;
        std::set<std::size_t> tags;
        for (const auto& item : s.context.samples) {
            ++counts[item.label()];
            tags.insert(tag_of(item.covariates()));
            EXPECT_EQ(data[tag_of(item.covariates())].label, item.label());
        }
        ++counts[s.truth];
        tags.insert(tag_of(s.context.query));
        EXPECT_EQ(tags.size(), 63u);
        EXPECT_EQ(data[tag_of(s.context.query)].label, s.truth);
        EXPECT_EQ(s.last_context_class, s.context.samples.back().label());
        int lo = 100, hi = 0;
        for (const auto& [c, n] : counts) lo = std::min(lo, n), hi = std::max(hi, n);
        EXPECT_EQ(counts.size(), 4u);
        EXPECT_LE(hi - lo, 1);
    }
}

TEST(Sampler, QueryClassIsRoughlyUniform) {
    const prompt::ContextSampler sampler(tagged_dataset({70, 70, 70, 70}), 63, 5);
    std::array<int, 4> counts{};
    for (std::size_t i = 0; i < 2000; ++i) ++counts[class_index(sampler.draw(i).truth)];
    for (int n : counts) EXPECT_NEAR(n, 500, 90);
}

TEST(Sampler, IndependentQueryIsUnrelatedToContextCounts) {
    const prompt::ContextSampler sampler(tagged_dataset({70, 70, 70, 70}), 9, 21, prompt::QueryDraw::Independent);
    std::array<int, 4> queries{};
    double own = 0.0;
    bool unbalanced = false;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const auto s = sampler.draw(static_cast<std::size_t>(i));
        ASSERT_EQ(s.context.samples.size(), 8u);
        std::array<int, 4> counts{};
        for (const auto& item : s.context.samples) ++counts[class_index(item.label())];
        own += counts[class_index(s.truth)];
        unbalanced |= *std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) > 1;
        ++queries[class_index(s.truth)];
        for (const auto& item : s.context.samples) EXPECT_NE(tag_of(item.covariates()), tag_of(s.context.query));
    }
    for (int q : queries) EXPECT_NEAR(q, n / 4, 120);
    // a trailing draw would average 4/3 here
    EXPECT_NEAR(own / n, 2.0, 0.06);
    EXPECT_TRUE(unbalanced);
}

TEST(Sampler, TrailingQueryClassIsShortInContext) {
    const prompt::ContextSampler sampler(tagged_dataset({70, 70, 70, 70}), 9, 21);
    double own = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const auto s = sampler.draw(static_cast<std::size_t>(i));
        for (const auto& item : s.context.samples) own += item.label() == s.truth;
    }
    EXPECT_NEAR(own / n, 4.0 / 3.0, 0.06);
}

TEST(Sampler, DrawDependsOnlyOnSeedAndIndex) {
    const auto data = tagged_dataset({10, 10, 10, 10});
    const auto all = prompt::sample_contexts(data, 20, 9, 42);
    const prompt::ContextSampler sampler(data, 9, 42);
    for (std::size_t i : {19u, 3u, 0u, 7u}) {
        const auto one = sampler.draw(i);
        EXPECT_EQ(one.seed, all[i].seed);
        EXPECT_EQ(tag_of(one.context.query), tag_of(all[i].context.query));
        for (std::size_t k = 0; k < 8; ++k)
            EXPECT_EQ(tag_of(one.context.samples[k].covariates()), tag_of(all[i].context.samples[k].covariates()));
    }
    const auto other = prompt::sample_contexts(data, 20, 9, 43);
    int same = 0;
    for (std::size_t i = 0; i < 20; ++i) same += tag_of(other[i].context.query) == tag_of(all[i].context.query);
    EXPECT_LT(same, 10);
}

TEST(Sampler, SmallClassesDrawWithReplacement) {
    const auto data = tagged_dataset({1, 2, 1, 1});
    const auto s = prompt::ContextSampler(data, 21, 0).draw(0);
    EXPECT_EQ(s.context.samples.size(), 20u);
}

TEST(Sampler, Errors) {
    EXPECT_THROW(prompt::ContextSampler(tagged_dataset({5, 5, 5, 5}), 4, 0), ArgumentError);
    EXPECT_THROW(prompt::ContextSampler(tagged_dataset({5, 0, 5, 5}), 9, 0), ArgumentError);
}

TEST(Episode, HorizonIsQueryOneHot) {
    const auto data = tagged_dataset({3, 3, 3, 3});
    const auto s = prompt::ContextSampler(data, 5, 1).draw(2);
    const auto ep = prompt::to_episode(s, 16);
    EXPECT_EQ(ep.targets_horizon.shape(), (ad::Shape{4, 4}));
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_EQ(ep.targets_horizon.at({t, j}), t == class_index(s.truth) ? 1.0 : 0.0);
    EXPECT_EQ(ep.covariates.shape(), (ad::Shape{2, 20}));
}

TEST(Classify, ProducesFourIntensitiesAndConsistentPrediction) {
    const auto c = small_classifier_config();
    const auto p = model::Parameters::initialize(c);
    std::mt19937_64 rng(9);
    std::vector<prompt::LabeledCovariates> data;
    for (std::size_t k = 0; k < 12; ++k) data.push_back({random_matrix(2, 4, rng), class_from_index(k % 4)});
    const prompt::ContextSampler sampler(data, 5, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto r = prompt::classify(p, c, sampler.draw(i).context);
        ASSERT_EQ(r.final_intensities.size(), 4u);
        ASSERT_EQ(r.intensities.size(), 16u);
        EXPECT_EQ(r.predicted, class_from_index(prompt::winner_takes_all(r.final_intensities)));
        double s = 0.0;
        for (double x : r.probabilities) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
        for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(r.intensity(class_from_index(t), 3), r.final_intensities[t]);
    }
}

TEST(Classify, RejectsWrongGeometry) {
    auto c = small_classifier_config();
    const auto p = model::Parameters::initialize(c);
    std::mt19937_64 rng(1);
    prompt::PromptContext ctx{{}, random_matrix(3, 4, rng)};
    for (int k = 0; k < 4; ++k) ctx.samples.emplace_back(random_matrix(3, 4, rng), FaultClass::Normal);
    EXPECT_THROW((void)prompt::classify(p, c, ctx), ContractError);
}

TEST(IntensityCsv, OneRowPerStep) {
    const auto c = small_classifier_config();
    const auto p = model::Parameters::initialize(c);
    std::mt19937_64 rng(2);
    prompt::PromptContext ctx{{}, random_matrix(2, 4, rng)};
    for (int k = 0; k < 4; ++k) ctx.samples.emplace_back(random_matrix(2, 4, rng), class_from_index(k));
    const auto r = prompt::classify(p, c, ctx);
    const auto path = std::filesystem::temp_directory_path() / ("tsicl_prompt_" + std::to_string(::getpid()) + ".csv");
    prompt::write_intensity_csv(path, r);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "step,class1,class2,class3,class4");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
        EXPECT_EQ(line.substr(0, line.find(',')), std::to_string(rows));
    }
    EXPECT_EQ(rows, 4);
    std::filesystem::remove(path);
}
