#include "tsicl/model/gtt.hpp"

#include "tsicl/autodiff/ops.hpp"
#include "tsicl/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tsicl::model {

namespace ops = tsicl::ad;
using ad::Tensor;

namespace {

// Self-attention over axis 1 of x [B, S, D]; queries only from positions
// [query_begin, S), keys and values from every position.
Tensor attention_sublayer(const Parameters& p, const std::string& prefix, const Tensor& x, std::size_t n_heads,
                          std::size_t query_begin) {
    const std::size_t S = x.dim(1);
    const Tensor h = ops::layernorm(x, p.get(prefix + "ln_gain"), p.get(prefix + "ln_bias"));
    const Tensor hq = query_begin == 0 ? h : ops::slice(h, 1, query_begin, S);
    const Tensor q = ops::add(ops::matmul(hq, p.get(prefix + "wq")), p.get(prefix + "bq"));
    const Tensor k = ops::add(ops::matmul(h, p.get(prefix + "wk")), p.get(prefix + "bk"));
    const Tensor v = ops::add(ops::matmul(h, p.get(prefix + "wv")), p.get(prefix + "bv"));
    const Tensor a = ops::multi_head_attention(q, k, v, n_heads);
    const Tensor o = ops::add(ops::matmul(a, p.get(prefix + "wo")), p.get(prefix + "bo"));
    const Tensor residual = query_begin == 0 ? x : ops::slice(x, 1, query_begin, S);
    return ops::add(residual, o);
}

Tensor feedforward_sublayer(const Parameters& p, const std::string& prefix, const Tensor& x) {
    const Tensor h = ops::layernorm(x, p.get(prefix + "ln_gain"), p.get(prefix + "ln_bias"));
    const Tensor u = ops::gelu(ops::add(ops::matmul(h, p.get(prefix + "w1")), p.get(prefix + "b1")));
    return ops::add(x, ops::add(ops::matmul(u, p.get(prefix + "w2")), p.get(prefix + "b2")));
}

} // namespace

ForecastDistribution forward(const Parameters& params, const ModelConfig& config, const Tensor& targets_context,
                             const Tensor& covariates, ForwardOptions options) {
    const std::size_t T = config.n_targets;
    const std::size_t N = config.n_covariates;
    const std::size_t L = config.context_steps;
    const std::size_t H = config.horizon_steps;
    const std::size_t P = config.patch_size;
    const std::size_t C = config.n_channels();
    const std::size_t S = config.total_patches();
    const std::size_t Sc = config.context_patches();
    const std::size_t K = config.n_mixture;

    if (targets_context.shape() != ad::Shape{T, L}) {
        throw DimensionError("forward: targets_context must be " + ad::to_string({T, L}) + ", got " +
                             ad::to_string(targets_context.shape()));
    }
    if (covariates.shape() != ad::Shape{N, L + H}) {
        throw DimensionError("forward: covariates must be " + ad::to_string({N, L + H}) + ", got " +
                             ad::to_string(covariates.shape()));
    }

    // Channel grid [C, L+H]: targets first (horizon zero-filled), then covariates.
    std::vector<double> grid(C * (L + H), 0.0);
    std::vector<double> sink_mask(C * S, 0.0);
    {
        const auto tc = targets_context.data();
        const auto cv = covariates.data();
        for (std::size_t t = 0; t < T; ++t) {
            std::copy_n(tc.data() + t * L, L, grid.data() + t * (L + H));
            for (std::size_t s = Sc; s < S; ++s) sink_mask[t * S + s] = 1.0;
        }
        std::copy(cv.begin(), cv.end(), grid.begin() + static_cast<std::ptrdiff_t>(T * (L + H)));
    }
    std::vector<double> keep_mask(C * S);
    for (std::size_t i = 0; i < keep_mask.size(); ++i) keep_mask[i] = 1.0 - sink_mask[i];
    std::vector<double> role_onehot(C * 2, 0.0);
    for (std::size_t c = 0; c < C; ++c) role_onehot[c * 2 + (c < T ? 1 : 0)] = 1.0;

    const Tensor patches = Tensor::from({C, S, P}, std::move(grid));
    const Tensor keep = Tensor::from({C, S, 1}, std::move(keep_mask));
    const Tensor sink_at = Tensor::from({C, S, 1}, std::move(sink_mask));
    const Tensor roles = Tensor::from({C, 2}, std::move(role_onehot));

    // Token embedding [C, S, D].
    Tensor x = ops::add(ops::matmul(patches, params.get("patch.weight")), params.get("patch.bias"));
    x = ops::add(ops::mul(x, keep), ops::mul(sink_at, params.get("sink")));
    // Positions repeat every sample: [C, samples, H/P, D] + [H/P, D].
    const std::size_t Q = config.horizon_patches();
    x = ops::reshape(ops::add(ops::reshape(x, {C, S / Q, Q, config.d_model}), params.get("position")),
                     {C, S, config.d_model});
    const Tensor role = ops::matmul(roles, params.get("role"));
    x = ops::add(x, ops::reshape(role, {C, 1, config.d_model}));

    for (std::size_t b = 0; b < config.n_blocks; ++b) {
        const std::string prefix = "block" + std::to_string(b) + ".";
        // In the last block only horizon patches feed the head.
        const bool trim = !options.full_last_block && b + 1 == config.n_blocks && x.dim(1) == S;
        x = attention_sublayer(params, prefix + "temporal.", x, config.n_heads, trim ? Sc : 0);

        Tensor across = ops::transpose(x, {1, 0, 2}); // [S', C, D]
        across = attention_sublayer(params, prefix + "channel.", across, config.n_heads, 0);
        x = ops::transpose(across, {1, 0, 2});

        x = feedforward_sublayer(params, prefix + "ffn.", x);
    }

    // Target channels over the horizon patches: [T, H/P, D].
    Tensor y = ops::slice(x, 0, 0, T);
    if (y.dim(1) == S) y = ops::slice(y, 1, Sc, S);
    y = ops::layernorm(y, params.get("final.ln_gain"), params.get("final.ln_bias"));
    Tensor head = ops::add(ops::matmul(y, params.get("head.weight")), params.get("head.bias"));
    head = ops::reshape(head, {T, H, 3 * K});

    const Tensor logits = ops::slice(head, 2, 0, K);
    ForecastDistribution dist;
    dist.weights = ops::softmax_last_axis(logits);
    dist.log_weights = ops::log_softmax_last_axis(logits);
    dist.means = ops::slice(head, 2, K, 2 * K);
    dist.scales = ops::clamp_min(ops::exp(ops::slice(head, 2, 2 * K, 3 * K)), kScaleFloor);
    return dist;
}

Tensor gmm_nll(const ForecastDistribution& dist, const Tensor& targets_horizon, double min_scale) {
    const std::size_t T = dist.n_targets();
    const std::size_t H = dist.horizon();
    if (targets_horizon.shape() != ad::Shape{T, H}) {
        throw DimensionError("gmm_nll: targets must be " + ad::to_string({T, H}) + ", got " +
                             ad::to_string(targets_horizon.shape()));
    }
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const Tensor x = ops::reshape(targets_horizon, {T, H, 1});
    if (!(min_scale > 0.0)) throw ArgumentError("gmm_nll: min_scale must be positive");
    const Tensor scales = min_scale > kScaleFloor ? ops::clamp_min(dist.scales, min_scale) : dist.scales;
    const Tensor log_scale = ops::log(scales);
    const Tensor z = ops::mul(ops::sub(x, dist.means), ops::exp(ops::neg(log_scale)));
    Tensor comp = ops::sub(dist.log_weights, log_scale);
    comp = ops::sub(comp, ops::scale(ops::square(z), 0.5));
    comp = ops::add_scalar(comp, -half_log_2pi);
    return ops::neg(ops::mean_all(ops::logsumexp_last_axis(comp)));
}

std::vector<double> point_forecast(const ForecastDistribution& dist) {
    const std::size_t K = dist.n_mixture();
    const auto w = dist.weights.data();
    const auto mu = dist.means.data();
    std::vector<double> out(w.size() / K, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t k = 0; k < K; ++k) out[i] += w[i * K + k] * mu[i * K + k];
    }
    return out;
}

} // namespace tsicl::model
