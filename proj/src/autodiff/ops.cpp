#include "tsicl/autodiff/ops.hpp"

#include "tsicl/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace tsicl::ad {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using MutStridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
    if (Tape::active() == nullptr) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

template <typename Backward>
Tensor make_result(Shape shape, Buffer data, bool track, Backward&& backward) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->is_leaf = false;
    if (track) {
        node->requires_grad = true;
        node->backward = std::forward<Backward>(backward);
        Tape::active()->record(node);
    }
    return Tensor(std::move(node));
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

// ---------------------------------------------------------------------------
// Broadcasting

struct BroadcastPlan {
    Shape out;
    std::vector<std::size_t> a_stride; // per output axis, 0 where broadcast
    std::vector<std::size_t> b_stride;
};

std::vector<std::size_t> contiguous_strides(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
    const std::size_t r = std::max(a.size(), b.size());
    BroadcastPlan p;
    p.out.assign(r, 1);
    p.a_stride.assign(r, 0);
    p.b_stride.assign(r, 0);
    const auto as = contiguous_strides(a);
    const auto bs = contiguous_strides(b);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t ai = i + a.size() >= r ? a[i + a.size() - r] : 1;
        const std::size_t bi = i + b.size() >= r ? b[i + b.size() - r] : 1;
        if (ai != bi && ai != 1 && bi != 1) {
            throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " + to_string(b));
        }
        p.out[i] = std::max(ai, bi);
        if (i + a.size() >= r && ai != 1) p.a_stride[i] = as[i + a.size() - r];
        if (i + b.size() >= r && bi != 1) p.b_stride[i] = bs[i + b.size() - r];
    }
    return p;
}

// Calls f(out_index, a_index, b_index) for every output element, row-major.
template <typename F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
    const std::size_t r = p.out.size();
    const std::size_t total = numel_of(p.out);
    if (total == 0) return;
    if (r == 0) {
        f(0, 0, 0);
        return;
    }
    const std::size_t inner = p.out[r - 1];
    const std::size_t sa = p.a_stride[r - 1];
    const std::size_t sb = p.b_stride[r - 1];
    std::vector<std::size_t> counter(r, 0);
    std::size_t a_base = 0;
    std::size_t b_base = 0;
    for (std::size_t o = 0; o < total; o += inner) {
        for (std::size_t j = 0; j < inner; ++j) f(o + j, a_base + j * sa, b_base + j * sb);
        // advance the outer counters
        for (std::size_t ax = r - 1; ax-- > 0;) {
            ++counter[ax];
            a_base += p.a_stride[ax];
            b_base += p.b_stride[ax];
            if (counter[ax] < p.out[ax]) break;
            a_base -= p.a_stride[ax] * counter[ax];
            b_base -= p.b_stride[ax] * counter[ax];
            counter[ax] = 0;
        }
    }
}

template <typename Forward, typename GradA, typename GradB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Forward fwd, GradA ga, GradB gb) {
    require_defined(a, name);
    require_defined(b, name);
    const bool track = any_requires_grad({&a, &b});
    NodePtr an = a.node();
    NodePtr bn = b.node();
    if (a.shape() == b.shape()) {
        const std::size_t n = a.numel();
        Buffer out(n);
        const double* x = an->data.data();
        const double* y = bn->data.data();
        for (std::size_t i = 0; i < n; ++i) out[i] = fwd(x[i], y[i]);
        return make_result(a.shape(), std::move(out), track, [an, bn, ga, gb](Node& self) {
            const std::size_t n = self.data.size();
            const double* x = an->data.data();
            const double* y = bn->data.data();
            const double* g = self.grad.data();
            if (an->requires_grad) {
                auto& d = an->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * ga(x[i], y[i]);
            }
            if (bn->requires_grad) {
                auto& d = bn->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * gb(x[i], y[i]);
            }
        });
    }
    auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a.shape(), b.shape(), name));
    Buffer out(numel_of(plan->out));
    const double* x = an->data.data();
    const double* y = bn->data.data();
    for_each_broadcast(*plan, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = fwd(x[i], y[j]); });
    return make_result(plan->out, std::move(out), track, [an, bn, plan, ga, gb](Node& self) {
        const double* x = an->data.data();
        const double* y = bn->data.data();
        const double* g = self.grad.data();
        if (an->requires_grad) {
            auto& d = an->ensure_grad();
            for_each_broadcast(*plan, [&](std::size_t o, std::size_t i, std::size_t j) { d[i] += g[o] * ga(x[i], y[j]); });
        }
        if (bn->requires_grad) {
            auto& d = bn->ensure_grad();
            for_each_broadcast(*plan, [&](std::size_t o, std::size_t i, std::size_t j) { d[j] += g[o] * gb(x[i], y[j]); });
        }
    });
}

// Elementwise unary op; `deriv(x, y)` receives input and output values.
template <typename Forward, typename Deriv>
Tensor unary_op(const Tensor& x, const char* name, Forward fwd, Deriv deriv) {
    require_defined(x, name);
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    const std::size_t n = x.numel();
    Buffer out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xn->data[i]);
    return make_result(x.shape(), std::move(out), track, [xn, deriv](Node& self) {
        auto& d = xn->ensure_grad();
        const std::size_t n = self.data.size();
        for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[i] * deriv(xn->data[i], self.data[i]);
    });
}

// Views a tensor as [outer, axis_len, inner] around `axis`.
struct AxisView {
    std::size_t outer = 1;
    std::size_t len = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
    v.len = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

std::size_t last_axis_len(const Tensor& x, const char* op) {
    if (x.rank() == 0 || x.shape().back() == 0 || x.numel() == 0) {
        throw DimensionError(std::string(op) + ": needs a non-empty last axis, got shape " + to_string(x.shape()));
    }
    return x.shape().back();
}

} // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double factor) {
    return unary_op(
        x, "scale", [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
    return unary_op(
        x, "add_scalar", [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor square(const Tensor& x) {
    return unary_op(
        x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    require_defined(x, "log");
    for (double v : x.data()) {
        if (!(v > 0.0)) throw DomainError("log: input must be strictly positive, got " + std::to_string(v));
    }
    return unary_op(
        x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor clamp_min(const Tensor& x, double floor) {
    return unary_op(
        x, "clamp_min", [floor](double v) { return v < floor ? floor : v; },
        [floor](double v, double) { return v < floor ? 0.0 : 1.0; });
}

namespace {

// tanh(kC (x + kA x^3)) for a contiguous block, via the vectorized exp:
// tanh(u) = 1 - 2 / (exp(2u) + 1).
void gelu_tanh(const double* x, double* t, std::size_t n) {
    constexpr double kC = 0.7978845608028654; // sqrt(2/pi)
    constexpr double kA = 0.044715;
    Eigen::Map<const Eigen::ArrayXd> xa(x, static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::ArrayXd> ta(t, static_cast<Eigen::Index>(n));
    ta = 1.0 - 2.0 / ((2.0 * kC * (xa + kA * xa.cube())).exp() + 1.0);
}

} // namespace

Tensor gelu(const Tensor& x) {
    require_defined(x, "gelu");
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    const std::size_t n = x.numel();
    Buffer out(n);
    gelu_tanh(xn->data.data(), out.data(), n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * xn->data[i] * (1.0 + out[i]);
    return make_result(x.shape(), std::move(out), track, [xn, n](Node& self) {
        constexpr double kC = 0.7978845608028654;
        constexpr double kA = 0.044715;
        Buffer t(n);
        gelu_tanh(xn->data.data(), t.data(), n);
        auto& d = xn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = xn->data[i];
            const double du = kC * (1.0 + 3.0 * kA * v * v);
            d[i] += self.grad[i] * (0.5 * (1.0 + t[i]) + 0.5 * v * (1.0 - t[i] * t[i]) * du);
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix product

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.rank() < 2 || b.rank() < 2) {
        throw DimensionError("matmul: operands need rank >= 2, got " + to_string(a.shape()) + " and " +
                             to_string(b.shape()));
    }
    const std::size_t p = a.shape()[a.rank() - 2];
    const std::size_t q = a.shape()[a.rank() - 1];
    const std::size_t q2 = b.shape()[b.rank() - 2];
    const std::size_t r = b.shape()[b.rank() - 1];
    if (q != q2) {
        throw DimensionError("matmul: inner dimensions disagree: " + to_string(a.shape()) + " x " +
                             to_string(b.shape()));
    }
    const Shape a_lead(a.shape().begin(), a.shape().end() - 2);
    const Shape b_lead(b.shape().begin(), b.shape().end() - 2);
    const bool track = any_requires_grad({&a, &b});
    NodePtr an = a.node();
    NodePtr bn = b.node();

    // Common case: a batch of rows against one weight matrix.
    if (b_lead.empty() || numel_of(b_lead) == 1) {
        const std::size_t rows = numel_of(a_lead) * p;
        Shape out_shape = a_lead;
        if (b_lead.size() > a_lead.size()) out_shape = b_lead; // [1,..] weights promote rank
        out_shape.push_back(p);
        out_shape.push_back(r);
        Buffer out(rows * r);
        MutMap(out.data(), rows, r).noalias() = ConstMap(an->data.data(), rows, q) * ConstMap(bn->data.data(), q, r);
        return make_result(std::move(out_shape), std::move(out), track, [an, bn, rows, q, r](Node& self) {
            ConstMap g(self.grad.data(), rows, r);
            if (an->requires_grad) {
                MutMap(an->ensure_grad().data(), rows, q).noalias() += g * ConstMap(bn->data.data(), q, r).transpose();
            }
            if (bn->requires_grad) {
                MutMap(bn->ensure_grad().data(), q, r).noalias() +=
                    ConstMap(an->data.data(), rows, q).transpose() * g;
            }
        });
    }

    // General batched case with broadcasting of leading dimensions.
    auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a_lead, b_lead, "matmul"));
    const std::size_t batches = numel_of(plan->out);
    auto a_off = std::make_shared<std::vector<std::size_t>>(batches);
    auto b_off = std::make_shared<std::vector<std::size_t>>(batches);
    for_each_broadcast(*plan, [&](std::size_t o, std::size_t i, std::size_t j) {
        (*a_off)[o] = i * p * q;
        (*b_off)[o] = j * q * r;
    });
    Shape out_shape = plan->out;
    out_shape.push_back(p);
    out_shape.push_back(r);
    Buffer out(batches * p * r);
    for (std::size_t k = 0; k < batches; ++k) {
        MutMap(out.data() + k * p * r, p, r).noalias() =
            ConstMap(an->data.data() + (*a_off)[k], p, q) * ConstMap(bn->data.data() + (*b_off)[k], q, r);
    }
    return make_result(std::move(out_shape), std::move(out), track, [an, bn, a_off, b_off, batches, p, q, r](Node& self) {
        for (std::size_t k = 0; k < batches; ++k) {
            ConstMap g(self.grad.data() + k * p * r, p, r);
            if (an->requires_grad) {
                MutMap(an->ensure_grad().data() + (*a_off)[k], p, q).noalias() +=
                    g * ConstMap(bn->data.data() + (*b_off)[k], q, r).transpose();
            }
            if (bn->requires_grad) {
                MutMap(bn->ensure_grad().data() + (*b_off)[k], q, r).noalias() +=
                    ConstMap(an->data.data() + (*a_off)[k], p, q).transpose() * g;
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Last-axis normalizations

Tensor softmax_last_axis(const Tensor& x) {
    require_defined(x, "softmax_last_axis");
    const std::size_t n = last_axis_len(x, "softmax_last_axis");
    const std::size_t rows = x.numel() / n;
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    Buffer out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xn->data.data() + r * n;
        double* o = out.data() + r * n;
        const double m = *std::max_element(in, in + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += (o[j] = std::exp(in[j] - m));
        for (std::size_t j = 0; j < n; ++j) o[j] /= sum;
    }
    return make_result(x.shape(), std::move(out), track, [xn, n, rows](Node& self) {
        auto& d = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
            for (std::size_t j = 0; j < n; ++j) d[r * n + j] += y[j] * (g[j] - dot);
        }
    });
}

Tensor log_softmax_last_axis(const Tensor& x) {
    require_defined(x, "log_softmax_last_axis");
    const std::size_t n = last_axis_len(x, "log_softmax_last_axis");
    const std::size_t rows = x.numel() / n;
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    Buffer out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xn->data.data() + r * n;
        const double m = *std::max_element(in, in + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(in[j] - m);
        const double lse = m + std::log(sum);
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = in[j] - lse;
    }
    return make_result(x.shape(), std::move(out), track, [xn, n, rows](Node& self) {
        auto& d = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double gsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) gsum += g[j];
            for (std::size_t j = 0; j < n; ++j) d[r * n + j] += g[j] - std::exp(y[j]) * gsum;
        }
    });
}

Tensor logsumexp_last_axis(const Tensor& x) {
    require_defined(x, "logsumexp_last_axis");
    const std::size_t n = last_axis_len(x, "logsumexp_last_axis");
    const std::size_t rows = x.numel() / n;
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    Buffer out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xn->data.data() + r * n;
        if (n == 1) {
            out[r] = in[0];
            continue;
        }
        const double m = *std::max_element(in, in + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(in[j] - m);
        out[r] = m + std::log(sum);
    }
    Shape shape(x.shape().begin(), x.shape().end() - 1);
    return make_result(std::move(shape), std::move(out), track, [xn, n, rows](Node& self) {
        auto& d = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* in = xn->data.data() + r * n;
            for (std::size_t j = 0; j < n; ++j) d[r * n + j] += self.grad[r] * std::exp(in[j] - self.data[r]);
        }
    });
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_defined(x, "layernorm");
    const std::size_t n = last_axis_len(x, "layernorm");
    if (gain.shape() != Shape{n} || bias.shape() != Shape{n}) {
        throw DimensionError("layernorm: gain/bias must have shape [" + std::to_string(n) + "], got " +
                             to_string(gain.shape()) + " and " + to_string(bias.shape()));
    }
    if (!(eps > 0.0)) throw ContractError("layernorm: eps must be positive");
    const std::size_t rows = x.numel() / n;
    const bool track = any_requires_grad({&x, &gain, &bias});
    NodePtr xn = x.node();
    NodePtr gn = gain.node();
    NodePtr bn = bias.node();
    auto xhat = std::make_shared<Buffer>(x.numel());
    auto rstd = std::make_shared<Buffer>(rows);
    Buffer out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xn->data.data() + r * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += in[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (in[j] - mean) * (in[j] - mean);
        var /= static_cast<double>(n);
        const double rs = 1.0 / std::sqrt(var + eps);
        (*rstd)[r] = rs;
        for (std::size_t j = 0; j < n; ++j) {
            const double h = (in[j] - mean) * rs;
            (*xhat)[r * n + j] = h;
            out[r * n + j] = h * gn->data[j] + bn->data[j];
        }
    }
    return make_result(x.shape(), std::move(out), track, [xn, gn, bn, xhat, rstd, n, rows](Node& self) {
        Buffer dh(n);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = self.grad.data() + r * n;
            const double* h = xhat->data() + r * n;
            if (gn->requires_grad) {
                auto& dg = gn->ensure_grad();
                for (std::size_t j = 0; j < n; ++j) dg[j] += g[j] * h[j];
            }
            if (bn->requires_grad) {
                auto& db = bn->ensure_grad();
                for (std::size_t j = 0; j < n; ++j) db[j] += g[j];
            }
            if (xn->requires_grad) {
                double mean_dh = 0.0;
                double mean_dh_h = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    dh[j] = g[j] * gn->data[j];
                    mean_dh += dh[j];
                    mean_dh_h += dh[j] * h[j];
                }
                mean_dh /= static_cast<double>(n);
                mean_dh_h /= static_cast<double>(n);
                auto& dx = xn->ensure_grad();
                for (std::size_t j = 0; j < n; ++j) {
                    dx[r * n + j] += (*rstd)[r] * (dh[j] - mean_dh - h[j] * mean_dh_h);
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor reduce_sum(const Tensor& x, std::size_t axis) {
    require_defined(x, "reduce_sum");
    if (axis >= x.rank()) {
        throw DimensionError("reduce_sum: axis " + std::to_string(axis) + " out of range for " + to_string(x.shape()));
    }
    const AxisView v = axis_view(x.shape(), axis);
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    Buffer out(v.outer * v.inner, 0.0);
    for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t k = 0; k < v.len; ++k)
            for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += xn->data[(o * v.len + k) * v.inner + i];
    Shape shape = x.shape();
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    return make_result(std::move(shape), std::move(out), track, [xn, v](Node& self) {
        auto& d = xn->ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o)
            for (std::size_t k = 0; k < v.len; ++k)
                for (std::size_t i = 0; i < v.inner; ++i) d[(o * v.len + k) * v.inner + i] += self.grad[o * v.inner + i];
    });
}

Tensor reduce_mean(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("reduce_mean: axis " + std::to_string(axis) + " out of range for " + to_string(x.shape()));
    }
    return scale(reduce_sum(x, axis), 1.0 / static_cast<double>(x.shape()[axis]));
}

Tensor sum_all(const Tensor& x) {
    require_defined(x, "sum_all");
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    double s = 0.0;
    for (double v : xn->data) s += v;
    return make_result({}, {s}, track, [xn](Node& self) {
        auto& d = xn->ensure_grad();
        for (double& g : d) g += self.grad[0];
    });
}

Tensor mean_all(const Tensor& x) {
    if (x.numel() == 0) throw DimensionError("mean_all: empty tensor");
    return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor reshape(const Tensor& x, Shape shape) {
    require_defined(x, "reshape");
    if (numel_of(shape) != x.numel()) {
        throw DimensionError("reshape: " + to_string(x.shape()) + " cannot become " + to_string(shape));
    }
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    return make_result(std::move(shape), xn->data, track, [xn](Node& self) {
        auto& d = xn->ensure_grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    });
}

Tensor transpose(const Tensor& x, const std::vector<std::size_t>& perm) {
    require_defined(x, "transpose");
    const std::size_t r = x.rank();
    std::vector<bool> seen(r, false);
    if (perm.size() != r) throw DimensionError("transpose: permutation length differs from rank " + std::to_string(r));
    for (std::size_t p : perm) {
        if (p >= r || seen[p]) throw DimensionError("transpose: invalid permutation");
        seen[p] = true;
    }
    const auto in_strides = contiguous_strides(x.shape());
    Shape out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.shape()[perm[i]];
    // gather plan: output axis i walks input axis perm[i]
    BroadcastPlan plan;
    plan.out = out_shape;
    plan.a_stride.resize(r);
    plan.b_stride.assign(r, 0);
    for (std::size_t i = 0; i < r; ++i) plan.a_stride[i] = in_strides[perm[i]];
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    Buffer out(x.numel());
    for_each_broadcast(plan, [&](std::size_t o, std::size_t i, std::size_t) { out[o] = xn->data[i]; });
    auto shared_plan = std::make_shared<BroadcastPlan>(std::move(plan));
    return make_result(std::move(out_shape), std::move(out), track, [xn, shared_plan](Node& self) {
        auto& d = xn->ensure_grad();
        for_each_broadcast(*shared_plan, [&](std::size_t o, std::size_t i, std::size_t) { d[i] += self.grad[o]; });
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    for (const auto& t : parts) require_defined(t, "concat");
    const Shape& ref = parts.front().shape();
    if (axis >= ref.size()) throw DimensionError("concat: axis out of range for " + to_string(ref));
    std::size_t total = 0;
    for (const auto& t : parts) {
        const Shape& s = t.shape();
        bool ok = s.size() == ref.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == ref[i];
        if (!ok) throw DimensionError("concat: " + to_string(s) + " incompatible with " + to_string(ref));
        total += s[axis];
    }
    Shape out_shape = ref;
    out_shape[axis] = total;
    const AxisView v = axis_view(out_shape, axis);
    bool track = false;
    std::vector<NodePtr> nodes;
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& t : parts) {
        track = track || any_requires_grad({&t});
        nodes.push_back(t.node());
        offsets.push_back(off);
        off += t.shape()[axis];
    }
    Buffer out(numel_of(out_shape));
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const std::size_t len = parts[p].shape()[axis];
        for (std::size_t o = 0; o < v.outer; ++o) {
            std::copy_n(nodes[p]->data.data() + o * len * v.inner, len * v.inner,
                        out.data() + (o * v.len + offsets[p]) * v.inner);
        }
    }
    return make_result(std::move(out_shape), std::move(out), track, [nodes, offsets, v](Node& self) {
        for (std::size_t p = 0; p < nodes.size(); ++p) {
            if (!nodes[p]->requires_grad) continue;
            auto& d = nodes[p]->ensure_grad();
            const std::size_t len = d.size() / (v.outer * v.inner);
            for (std::size_t o = 0; o < v.outer; ++o) {
                const double* g = self.grad.data() + (o * v.len + offsets[p]) * v.inner;
                double* dst = d.data() + o * len * v.inner;
                for (std::size_t i = 0; i < len * v.inner; ++i) dst[i] += g[i];
            }
        }
    });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    require_defined(x, "slice");
    if (axis >= x.rank()) throw DimensionError("slice: axis out of range for " + to_string(x.shape()));
    if (begin > end || end > x.shape()[axis]) {
        throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") invalid for axis of length " + std::to_string(x.shape()[axis]));
    }
    const AxisView v = axis_view(x.shape(), axis);
    const std::size_t len = end - begin;
    Shape out_shape = x.shape();
    out_shape[axis] = len;
    const bool track = any_requires_grad({&x});
    NodePtr xn = x.node();
    Buffer out(v.outer * len * v.inner);
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::copy_n(xn->data.data() + (o * v.len + begin) * v.inner, len * v.inner, out.data() + o * len * v.inner);
    }
    return make_result(std::move(out_shape), std::move(out), track, [xn, v, begin, len](Node& self) {
        auto& d = xn->ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o) {
            const double* g = self.grad.data() + o * len * v.inner;
            double* dst = d.data() + (o * v.len + begin) * v.inner;
            for (std::size_t i = 0; i < len * v.inner; ++i) dst[i] += g[i];
        }
    });
}

// ---------------------------------------------------------------------------
// Attention

namespace {

struct AttentionDims {
    std::size_t batch, sq, sk, width, heads, head_dim;
};

AttentionDims check_attention(const Tensor& q, const Tensor& k, const Tensor* v, std::size_t n_heads) {
    require_defined(q, "attention");
    require_defined(k, "attention");
    if (q.rank() != 3 || k.rank() != 3) {
        throw DimensionError("attention: q and k must be [B, S, D], got " + to_string(q.shape()) + " and " +
                             to_string(k.shape()));
    }
    if (v && v->shape() != k.shape()) {
        throw DimensionError("attention: v shape " + to_string(v->shape()) + " differs from k shape " + to_string(k.shape()));
    }
    AttentionDims d{q.dim(0), q.dim(1), k.dim(1), q.dim(2), n_heads, 0};
    if (k.dim(0) != d.batch || k.dim(2) != d.width) {
        throw DimensionError("attention: q " + to_string(q.shape()) + " incompatible with k " + to_string(k.shape()));
    }
    if (n_heads == 0 || d.width % n_heads != 0) {
        throw DimensionError("attention: width " + std::to_string(d.width) + " not divisible by " +
                             std::to_string(n_heads) + " heads");
    }
    if (d.sk == 0) throw DimensionError("attention: empty key sequence");
    d.head_dim = d.width / n_heads;
    return d;
}

// Computes row-stable softmax probabilities in place; returns per-row logsumexp.
void softmax_rows(RowMat& scores, double* lse) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        const double m = row.maxCoeff();
        row = (row.array() - m).exp();
        const double s = row.sum();
        row /= s;
        if (lse) lse[i] = m + std::log(s);
    }
}

} // namespace

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t n_heads) {
    require_defined(v, "attention");
    const AttentionDims d = check_attention(q, k, &v, n_heads);
    const bool track = any_requires_grad({&q, &k, &v});
    NodePtr qn = q.node();
    NodePtr kn = k.node();
    NodePtr vn = v.node();
    const double sc = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
    const auto W = static_cast<Eigen::Index>(d.width);
    auto lse = std::make_shared<Buffer>(d.batch * d.heads * d.sq);
    Buffer out(d.batch * d.sq * d.width);
    RowMat scores(d.sq, d.sk);
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t h = 0; h < d.heads; ++h) {
            const std::size_t col = h * d.head_dim;
            ConstStridedMap Q(qn->data.data() + b * d.sq * d.width + col, d.sq, d.head_dim, Eigen::OuterStride<>(W));
            ConstStridedMap K(kn->data.data() + b * d.sk * d.width + col, d.sk, d.head_dim, Eigen::OuterStride<>(W));
            ConstStridedMap V(vn->data.data() + b * d.sk * d.width + col, d.sk, d.head_dim, Eigen::OuterStride<>(W));
            MutStridedMap O(out.data() + b * d.sq * d.width + col, d.sq, d.head_dim, Eigen::OuterStride<>(W));
            scores.noalias() = sc * (Q * K.transpose());
            softmax_rows(scores, lse->data() + (b * d.heads + h) * d.sq);
            O.noalias() = scores * V;
        }
    }
    return make_result(q.shape(), std::move(out), track, [qn, kn, vn, lse, d, sc, W](Node& self) {
        RowMat p(d.sq, d.sk);
        RowMat dp(d.sq, d.sk);
        Eigen::VectorXd rowdot(d.sq);
        double* dq = qn->requires_grad ? qn->ensure_grad().data() : nullptr;
        double* dk = kn->requires_grad ? kn->ensure_grad().data() : nullptr;
        double* dv = vn->requires_grad ? vn->ensure_grad().data() : nullptr;
        for (std::size_t b = 0; b < d.batch; ++b) {
            for (std::size_t h = 0; h < d.heads; ++h) {
                const std::size_t col = h * d.head_dim;
                const std::size_t qoff = b * d.sq * d.width + col;
                const std::size_t koff = b * d.sk * d.width + col;
                ConstStridedMap Q(qn->data.data() + qoff, d.sq, d.head_dim, Eigen::OuterStride<>(W));
                ConstStridedMap K(kn->data.data() + koff, d.sk, d.head_dim, Eigen::OuterStride<>(W));
                ConstStridedMap V(vn->data.data() + koff, d.sk, d.head_dim, Eigen::OuterStride<>(W));
                ConstStridedMap O(self.data.data() + qoff, d.sq, d.head_dim, Eigen::OuterStride<>(W));
                ConstStridedMap dO(self.grad.data() + qoff, d.sq, d.head_dim, Eigen::OuterStride<>(W));
                const double* l = lse->data() + (b * d.heads + h) * d.sq;
                p.noalias() = sc * (Q * K.transpose());
                for (std::size_t i = 0; i < d.sq; ++i) p.row(i) = (p.row(i).array() - l[i]).exp();
                if (dv) MutStridedMap(dv + koff, d.sk, d.head_dim, Eigen::OuterStride<>(W)).noalias() += p.transpose() * dO;
                if (!dq && !dk) continue;
                dp.noalias() = dO * V.transpose();
                rowdot = (dO.array() * O.array()).rowwise().sum();
                dp = p.array() * (dp.colwise() - rowdot).array();
                if (dq) MutStridedMap(dq + qoff, d.sq, d.head_dim, Eigen::OuterStride<>(W)).noalias() += sc * (dp * K);
                if (dk) MutStridedMap(dk + koff, d.sk, d.head_dim, Eigen::OuterStride<>(W)).noalias() += sc * (dp.transpose() * Q);
            }
        }
    });
}

Tensor attention_weights(const Tensor& q, const Tensor& k, std::size_t n_heads) {
    const AttentionDims d = check_attention(q, k, nullptr, n_heads);
    const double sc = 1.0 / std::sqrt(static_cast<double>(d.head_dim));
    const auto W = static_cast<Eigen::Index>(d.width);
    Buffer out(d.batch * d.heads * d.sq * d.sk);
    RowMat scores(d.sq, d.sk);
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t h = 0; h < d.heads; ++h) {
            const std::size_t col = h * d.head_dim;
            ConstStridedMap Q(q.data().data() + b * d.sq * d.width + col, d.sq, d.head_dim, Eigen::OuterStride<>(W));
            ConstStridedMap K(k.data().data() + b * d.sk * d.width + col, d.sk, d.head_dim, Eigen::OuterStride<>(W));
            scores.noalias() = sc * (Q * K.transpose());
            softmax_rows(scores, nullptr);
            MutMap(out.data() + (b * d.heads + h) * d.sq * d.sk, d.sq, d.sk) = scores;
        }
    }
    return make_result({d.batch, d.heads, d.sq, d.sk}, std::move(out), false, [](Node&) {});
}

} // namespace tsicl::ad
