#include "gradcheck.hpp"

#include "tsicl/autodiff/ops.hpp"
#include "tsicl/errors.hpp"
#include "tsicl/model/checkpoint.hpp"
#include "tsicl/model/gtt.hpp"
#include "tsicl/model/train.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <unistd.h>

using namespace tsicl;
using tsicl::testing::random_tensor;
using tsicl::testing::rel_err;

namespace {

model::ModelConfig tiny_config(std::uint64_t seed = 0) {
    model::ModelConfig c;
    c.n_covariates = 3;
    c.n_targets = 2;
    c.context_steps = 8;
    c.horizon_steps = 4;
    c.patch_size = 2;
    c.d_model = 16;
    c.n_heads = 2;
    c.n_blocks = 1;
    c.n_mixture = 2;
    c.seed = seed;
    return c;
}

model::Episode random_episode(const model::ModelConfig& c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution bit(0.5);
    auto binary = [&](ad::Shape shape) {
        std::vector<double> v(ad::numel_of(shape));
        for (double& x : v) x = bit(rng) ? 1.0 : 0.0;
        return ad::Tensor::from(std::move(shape), std::move(v));
    };
    model::Episode ep;
    ep.targets_context = binary({c.n_targets, c.context_steps});
    ep.covariates = random_tensor({c.n_covariates, c.context_steps + c.horizon_steps}, rng, -2.0, 2.0);
    ep.targets_horizon = binary({c.n_targets, c.horizon_steps});
    return ep;
}

model::ForecastDistribution forward_nograd(const model::Parameters& p, const model::ModelConfig& c,
                                           const model::Episode& ep, model::ForwardOptions o = {}) {
    ad::NoGradGuard guard;
    return model::forward(p, c, ep.targets_context, ep.covariates, o);
}

model::ForecastDistribution make_dist(std::size_t T, std::size_t H, std::size_t K, std::vector<double> w,
                                      std::vector<double> mu, std::vector<double> sigma) {
    model::ForecastDistribution d;
    std::vector<double> lw(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) lw[i] = std::log(w[i]);
    d.weights = ad::Tensor::from({T, H, K}, std::move(w));
    d.log_weights = ad::Tensor::from({T, H, K}, std::move(lw));
    d.means = ad::Tensor::from({T, H, K}, std::move(mu));
    d.scales = ad::Tensor::from({T, H, K}, std::move(sigma));
    return d;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("tsicl_model_" + std::to_string(::getpid()) + "_" + name);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void expect_same(const model::ForecastDistribution& a, const model::ForecastDistribution& b, double tol) {
    auto cmp = [tol](const ad::Tensor& x, const ad::Tensor& y) {
        ASSERT_EQ(x.shape(), y.shape());
        for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(x.data()[i], y.data()[i], tol) << "element " << i;
    };
    cmp(a.weights, b.weights);
    cmp(a.means, b.means);
    cmp(a.scales, b.scales);
}

} // namespace

TEST(ModelConfig, ValidationRules) {
    model::ModelConfig c;
    EXPECT_NO_THROW(c.validate());
    c.n_covariates = 61;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.context_steps = 3969;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.d_model = 66;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.horizon_steps = 60;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.context_steps = 3968 + 8;
    EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(Parameters, DesktopConfigIsRoughlyFourHundredThousand) {
    const auto p = model::Parameters::initialize({});
    EXPECT_GT(p.scalar_count(), 200'000u);
    EXPECT_LT(p.scalar_count(), 600'000u);
}

TEST(Parameters, InitializationIsDeterministic) {
    const auto a = model::Parameters::initialize(tiny_config(5));
    const auto b = model::Parameters::initialize(tiny_config(5));
    const auto c = model::Parameters::initialize(tiny_config(6));
    ASSERT_EQ(a.size(), b.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(std::equal(a.tensors()[i].data().begin(), a.tensors()[i].data().end(), b.tensors()[i].data().begin()));
        differs |= !std::equal(a.tensors()[i].data().begin(), a.tensors()[i].data().end(), c.tensors()[i].data().begin());
    }
    EXPECT_TRUE(differs);
}

TEST(Forward, OutputShapes) {
    for (std::size_t k : {1u, 2u, 3u}) {
        auto c = tiny_config();
        c.n_mixture = k;
        const auto p = model::Parameters::initialize(c);
        const auto d = forward_nograd(p, c, random_episode(c, 1));
        const ad::Shape expected{2, 4, k};
        EXPECT_EQ(d.weights.shape(), expected);
        EXPECT_EQ(d.means.shape(), expected);
        EXPECT_EQ(d.scales.shape(), expected);
    }
}

TEST(Forward, RejectsMisshapedInputs) {
    const auto c = tiny_config();
    const auto p = model::Parameters::initialize(c);
    auto ep = random_episode(c, 1);
    EXPECT_THROW((void)model::forward(p, c, ep.targets_context, ad::Tensor::zeros({3, 11})), DimensionError);
    EXPECT_THROW((void)model::forward(p, c, ad::Tensor::zeros({2, 6}), ep.covariates), DimensionError);
}

TEST(Forward, SameParametersServeAnyWholeSampleContext) {
    const auto c = tiny_config();
    const auto p = model::Parameters::initialize(c);
    auto longer = c;
    longer.context_steps = 5 * c.horizon_steps;
    EXPECT_NO_THROW(p.check_against(longer));
    const auto d = forward_nograd(p, longer, random_episode(longer, 3));
    EXPECT_EQ(d.means.shape(), (ad::Shape{2, 4, 2}));
}

TEST(Forward, BitIdenticalOnRepeat) {
    const auto c = tiny_config();
    const auto p = model::Parameters::initialize(c);
    const auto ep = random_episode(c, 2);
    const auto a = forward_nograd(p, c, ep);
    const auto b = forward_nograd(p, c, ep);
    expect_same(a, b, 0.0);
}

TEST(Forward, TrimmedLastBlockMatchesFullLastBlock) {
    auto c = tiny_config();
    c.n_blocks = 2;
    const auto p = model::Parameters::initialize(c);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto ep = random_episode(c, s);
        expect_same(forward_nograd(p, c, ep), forward_nograd(p, c, ep, {.full_last_block = true}), 1e-12);
    }
}

TEST(Forward, AcceptsSixtyFourVariatesRejectsSixtyFive) {
    auto c = tiny_config();
    c.n_covariates = 60;
    c.n_targets = 4;
    EXPECT_NO_THROW(c.validate());
    const auto p = model::Parameters::initialize(c);
    EXPECT_NO_THROW((void)forward_nograd(p, c, random_episode(c, 1)));
    c.n_covariates = 61;
    EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(Invariants, SimplexAndScaleFloorOnRandomInputs) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto c = tiny_config(s);
        auto p = model::Parameters::initialize(c);
        std::mt19937_64 rng(s);
        // push some log-scales far below the floor
        auto bias = p.get("head.bias").mutable_data();
        std::uniform_real_distribution<double> u(-40.0, 5.0);
        for (double& b : bias) b = u(rng);
        const auto d = forward_nograd(p, c, random_episode(c, 1000 + s));
        const auto w = d.weights.data();
        const std::size_t K = d.n_mixture();
        for (std::size_t i = 0; i < w.size() / K; ++i) {
            double sum = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                EXPECT_GE(w[i * K + k], 0.0);
                sum += w[i * K + k];
            }
            EXPECT_NEAR(sum, 1.0, 1e-9);
        }
        for (double sc : d.scales.data()) EXPECT_GE(sc, model::kScaleFloor);
        for (double m : d.means.data()) EXPECT_TRUE(std::isfinite(m));
    }
}

TEST(Invariants, CovariatePermutationEquivariance) {
    const auto c = tiny_config();
    const auto p = model::Parameters::initialize(c);
    std::mt19937_64 rng(3);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto ep = random_episode(c, s);
        std::vector<std::size_t> perm(c.n_covariates);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const std::size_t W = ep.covariates.dim(1);
        std::vector<double> shuffled(ep.covariates.numel());
        for (std::size_t r = 0; r < c.n_covariates; ++r) {
            std::copy_n(ep.covariates.data().begin() + static_cast<std::ptrdiff_t>(perm[r] * W), W,
                        shuffled.begin() + static_cast<std::ptrdiff_t>(r * W));
        }
        model::Episode other = ep;
        other.covariates = ad::Tensor::from(ep.covariates.shape(), shuffled);
        expect_same(forward_nograd(p, c, ep), forward_nograd(p, c, other), 1e-9);
    }
}

TEST(Invariants, AttentionRowsSumToOne) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto q = random_tensor({3, 7, 8}, rng, -3.0, 3.0);
        const auto k = random_tensor({3, 7, 8}, rng, -3.0, 3.0);
        const auto a = ad::attention_weights(q, k, 2);
        const std::size_t n = a.dim(a.rank() - 1);
        for (std::size_t r = 0; r < a.numel() / n; ++r) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += a.data()[r * n + j];
            EXPECT_NEAR(sum, 1.0, 1e-9);
        }
    }
}

TEST(GmmNll, StandardNormalAtMean) {
    const auto d = make_dist(1, 1, 1, {1.0}, {0.3}, {1.0});
    const double loss = model::gmm_nll(d, ad::Tensor::from({1, 1}, {0.3})).item();
    EXPECT_NEAR(loss, 0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
    EXPECT_NEAR(loss, 0.918939, 1e-6);
}

TEST(GmmNll, IdenticalComponentsCollapseToOne) {
    const auto one = make_dist(1, 2, 1, {1.0, 1.0}, {0.2, -1.0}, {0.7, 2.0});
    const auto two = make_dist(1, 2, 2, {0.5, 0.5, 0.5, 0.5}, {0.2, 0.2, -1.0, -1.0}, {0.7, 0.7, 2.0, 2.0});
    const auto x = ad::Tensor::from({1, 2}, {1.0, 0.5});
    EXPECT_NEAR(model::gmm_nll(one, x).item(), model::gmm_nll(two, x).item(), 1e-14);
}

TEST(GmmNll, MatchesDirectDensity) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t T = 2, H = 3, K = 3;
        std::vector<double> w(T * H * K), mu(T * H * K), sigma(T * H * K), x(T * H);
        for (std::size_t i = 0; i < T * H; ++i) {
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k) total += (w[i * K + k] = 0.1 + u(rng));
            for (std::size_t k = 0; k < K; ++k) {
                w[i * K + k] /= total;
                mu[i * K + k] = 2.0 * u(rng) - 1.0;
                sigma[i * K + k] = 0.3 + u(rng);
            }
            x[i] = 2.0 * u(rng) - 1.0;
        }
        double naive = 0.0;
        for (std::size_t i = 0; i < T * H; ++i) {
            double p = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double z = (x[i] - mu[i * K + k]) / sigma[i * K + k];
                p += w[i * K + k] * std::exp(-0.5 * z * z) / (sigma[i * K + k] * std::sqrt(2.0 * std::numbers::pi));
            }
            naive -= std::log(p);
        }
        naive /= static_cast<double>(T * H);
        const double got = model::gmm_nll(make_dist(T, H, K, w, mu, sigma), ad::Tensor::from({T, H}, x)).item();
        EXPECT_LT(rel_err(got, naive, 0.0), 1e-10);
    }
}

TEST(GmmNll, MinScaleRaisesSmallScalesOnly) {
    const auto d = make_dist(1, 1, 1, {1.0}, {0.0}, {0.01});
    const auto x = ad::Tensor::from({1, 1}, {0.0});
    const double floored = model::gmm_nll(d, x, 0.5).item();
    EXPECT_NEAR(floored, 0.5 * std::log(2.0 * std::numbers::pi) + std::log(0.5), 1e-14);
    const auto wide = make_dist(1, 1, 1, {1.0}, {0.0}, {2.0});
    EXPECT_DOUBLE_EQ(model::gmm_nll(wide, x, 0.5).item(), model::gmm_nll(wide, x).item());
    EXPECT_THROW((void)model::gmm_nll(d, x, 0.0), ArgumentError);
}

TEST(GmmNll, RejectsMisshapedTargets) {
    const auto d = make_dist(1, 1, 1, {1.0}, {0.0}, {1.0});
    EXPECT_THROW((void)model::gmm_nll(d, ad::Tensor::zeros({2, 1})), DimensionError);
}

TEST(PointForecast, SingleComponentIsMean) {
    const auto d = make_dist(1, 3, 1, {1, 1, 1}, {0.1, -2.0, 5.0}, {1, 1, 1});
    EXPECT_EQ(model::point_forecast(d), (std::vector<double>{0.1, -2.0, 5.0}));
}

TEST(PointForecast, EqualMixtureOfZeroAndOne) {
    const auto d = make_dist(1, 1, 2, {0.5, 0.5}, {0.0, 1.0}, {1, 1});
    EXPECT_DOUBLE_EQ(model::point_forecast(d)[0], 0.5);
}

TEST(PointForecast, MatchesMonteCarloMean) {
    const std::vector<double> w{0.2, 0.5, 0.3}, mu{-1.0, 0.4, 2.0}, sigma{0.5, 1.0, 0.2};
    const auto d = make_dist(1, 1, 3, w, mu, sigma);
    std::mt19937_64 rng(77);
    std::discrete_distribution<std::size_t> comp(w.begin(), w.end());
    std::normal_distribution<double> z(0.0, 1.0);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const std::size_t k = comp(rng);
        sum += mu[k] + sigma[k] * z(rng);
    }
    EXPECT_NEAR(model::point_forecast(d)[0], sum / n, 5e-3);
}

TEST(Gradients, FullModelMatchesFiniteDifferences) {
    const auto c = tiny_config(4);
    auto p = model::Parameters::initialize(c);
    const auto ep = random_episode(c, 9);
    auto loss_of = [&]() {
        return model::gmm_nll(model::forward(p, c, ep.targets_context, ep.covariates), ep.targets_horizon);
    };
    p.set_requires_grad(true);
    {
        ad::Tape tape;
        tape.backward(loss_of());
    }
    std::mt19937_64 rng(31);
    ad::NoGradGuard guard;
    int checked = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto& t = p.tensors()[i];
        const auto grad = t.grad();
        auto values = t.mutable_data();
        std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
        for (int r = 0; r < 2; ++r) {
            const std::size_t j = pick(rng);
            const double saved = values[j];
            const double h = 1e-5;
            values[j] = saved + h;
            const double up = loss_of().item();
            values[j] = saved - h;
            const double down = loss_of().item();
            values[j] = saved;
            EXPECT_LT(rel_err(grad[j], (up - down) / (2.0 * h)), 1e-3) << p.names()[i] << "[" << j << "]";
            ++checked;
        }
    }
    EXPECT_GE(checked, 20);
}

TEST(Train, LearningRateSchedule) {
    model::TrainOptions o;
    o.steps = 110;
    o.warmup_steps = 10;
    o.learning_rate = 1.0;
    o.final_lr_fraction = 0.1;
    EXPECT_NEAR(model::scheduled_learning_rate(o, 0), 0.1, 1e-12);
    EXPECT_NEAR(model::scheduled_learning_rate(o, 9), 1.0, 1e-12);
    EXPECT_NEAR(model::scheduled_learning_rate(o, 10), 1.0, 1e-12);
    EXPECT_NEAR(model::scheduled_learning_rate(o, 60), 0.55, 1e-12);
    EXPECT_NEAR(model::scheduled_learning_rate(o, 109), 0.1, 1e-3);
    EXPECT_NEAR(model::scheduled_learning_rate(o, 110), 0.1, 1e-12);
    for (std::size_t s = 10; s < 109; ++s) {
        EXPECT_GE(model::scheduled_learning_rate(o, s), model::scheduled_learning_rate(o, s + 1));
    }
}

TEST(Train, ClipBoundsSpikeGradient) {
    const auto c = tiny_config();
    auto p = model::Parameters::initialize(c);
    p.set_requires_grad(true);
    {
        ad::Tape tape;
        const auto ep = random_episode(c, 1);
        tape.backward(model::gmm_nll(model::forward(p, c, ep.targets_context, ep.covariates), ep.targets_horizon));
    }
    p.tensors()[0].mutable_grad()[0] = 1e8;
    const double before = model::clip_gradients(p, 1.0);
    EXPECT_GT(before, 1e7);
    double norm2 = 0.0;
    for (const auto& t : p.tensors())
        for (double g : t.grad()) norm2 += g * g;
    EXPECT_LE(std::sqrt(norm2), 1.0 + 1e-12);
    // plain gradient step of size lr stays within lr
    const double lr = 0.05;
    EXPECT_LE(lr * std::sqrt(norm2), lr * (1.0 + 1e-12));
    // Adam's first step moves no coordinate further than lr
    auto before_values = p.clone();
    model::AdamOptimizer adam(p, 0.9, 0.999, 1e-8);
    adam.step(p, lr);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.tensors()[i].numel(); ++j)
            EXPECT_LE(std::abs(p.tensors()[i].data()[j] - before_values.tensors()[i].data()[j]), lr * (1.0 + 1e-9));
}

TEST(Train, SmallGradientsAreNotClipped) {
    const auto c = tiny_config();
    auto p = model::Parameters::initialize(c);
    p.set_requires_grad(true);
    p.tensors()[0].mutable_grad()[0] = 0.5;
    EXPECT_DOUBLE_EQ(model::clip_gradients(p, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(p.tensors()[0].grad()[0], 0.5);
}

TEST(Train, DeterministicTrace) {
    const auto c = tiny_config(2);
    model::TrainOptions o;
    o.steps = 20;
    const model::EpisodeSource src = [&](std::size_t step, std::size_t) { return random_episode(c, step); };
    const auto a = model::train(c, src, o);
    const auto b = model::train(c, src, o);
    ASSERT_EQ(a.trace.size(), 20u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(a.trace[i].step, i);
        EXPECT_EQ(a.trace[i].loss, b.trace[i].loss);
        EXPECT_EQ(a.trace[i].grad_norm, b.trace[i].grad_norm);
    }
}

TEST(Train, OverfitsOneEpisodeBelowGaussianBaseline) {
    const auto c = tiny_config(1);
    const auto ep = random_episode(c, 123);
    // per-step Gaussian fit over the target channels of the true horizon
    const std::size_t T = c.n_targets, H = c.horizon_steps;
    double baseline = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
        double mean = 0.0, var = 0.0;
        for (std::size_t t = 0; t < T; ++t) mean += ep.targets_horizon.at({t, h}) / T;
        for (std::size_t t = 0; t < T; ++t) var += std::pow(ep.targets_horizon.at({t, h}) - mean, 2) / T;
        var = std::max(var, 1e-2);
        baseline += 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5;
    }
    baseline /= static_cast<double>(H);
    model::TrainOptions o;
    o.steps = 500;
    o.learning_rate = 3e-3;
    const auto r = model::train(c, [&](std::size_t, std::size_t) { return ep; }, o);
    const double final_loss = model::gmm_nll(forward_nograd(r.params, c, ep), ep.targets_horizon).item();
    EXPECT_LT(final_loss, baseline);
    EXPECT_LT(r.trace.back().loss, r.trace.front().loss);
}

TEST(Train, RejectsZeroSteps) {
    model::TrainOptions o;
    o.steps = 0;
    EXPECT_THROW((void)model::train(tiny_config(), [&](std::size_t, std::size_t) { return random_episode(tiny_config(), 0); }, o),
                 ArgumentError);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
    const auto c = tiny_config(3);
    const auto p = model::Parameters::initialize(c);
    const auto a = temp_path("a.gttd"), b = temp_path("b.gttd");
    model::save_checkpoint(p, c, a);
    const auto loaded = model::load_checkpoint(a);
    EXPECT_EQ(loaded.config, c);
    model::save_checkpoint(loaded.params, loaded.config, b);
    EXPECT_EQ(read_bytes(a), read_bytes(b));
    EXPECT_EQ(model::checkpoint_crc(a), model::checkpoint_crc(b));
    const auto ep = random_episode(c, 4);
    expect_same(forward_nograd(p, c, ep), forward_nograd(loaded.params, c, ep), 0.0);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST(Checkpoint, RoundTripBitExactOnRandomParameters) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto c = tiny_config(s);
        auto p = model::Parameters::initialize(c);
        std::mt19937_64 rng(s);
        std::normal_distribution<double> n(0.0, 1e3);
        for (auto& t : p.tensors())
            for (double& v : t.mutable_data()) v = n(rng);
        const auto bytes = model::encode_checkpoint(p, c);
        const auto back = model::decode_checkpoint(bytes);
        ASSERT_EQ(back.params.names(), p.names());
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto x = p.tensors()[i].data(), y = back.params.tensors()[i].data();
            ASSERT_EQ(x.size(), y.size());
            EXPECT_EQ(std::memcmp(x.data(), y.data(), x.size() * sizeof(double)), 0);
        }
        EXPECT_EQ(model::encode_checkpoint(back.params, back.config), bytes);
    }
}

TEST(Checkpoint, WrongMagicIsFormatError) {
    const auto c = tiny_config();
    auto bytes = model::encode_checkpoint(model::Parameters::initialize(c), c);
    bytes[0] = 'X';
    EXPECT_THROW((void)model::decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, TruncationAndBitFlipsAreCorruption) {
    const auto c = tiny_config();
    const auto bytes = model::encode_checkpoint(model::Parameters::initialize(c), c);
    for (std::size_t cut : {std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW((void)model::decode_checkpoint(part), CorruptionError) << "cut at " << cut;
    }
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    EXPECT_THROW((void)model::decode_checkpoint(flipped), CorruptionError);
}

TEST(Checkpoint, MissingFileIsDataError) {
    EXPECT_THROW((void)model::load_checkpoint(temp_path("absent.gttd")), DataError);
}
