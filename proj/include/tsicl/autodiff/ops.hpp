#pragma once

#include "tsicl/autodiff/tensor.hpp"

#include <cstddef>
#include <vector>

namespace tsicl::ad {

// Elementwise binary ops broadcast numpy-style (shapes aligned from the right).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor neg(const Tensor& x);
Tensor square(const Tensor& x);

Tensor exp(const Tensor& x);
/// Natural log; every element must be strictly positive.
Tensor log(const Tensor& x);
/// max(x, floor) elementwise; gradient is zero where the floor is active.
Tensor clamp_min(const Tensor& x, double floor);

/// GELU, tanh approximation:
///   0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Tensor gelu(const Tensor& x);

/// Batched matrix product [..., p, q] x [..., q, r] -> [..., p, r].
/// Leading dimensions broadcast; rank-1 operands are not promoted.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor softmax_last_axis(const Tensor& x);
Tensor log_softmax_last_axis(const Tensor& x);
/// Reduces the last axis; result drops that axis.
Tensor logsumexp_last_axis(const Tensor& x);

/// Normalizes over the last axis, then applies gain and bias of that length.
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// Reduction over one axis; the axis is removed from the result.
Tensor reduce_sum(const Tensor& x, std::size_t axis);
Tensor reduce_mean(const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x, const std::vector<std::size_t>& perm);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Scaled dot-product attention, heads split along the feature axis.
///   q: [B, Sq, D], k and v: [B, Sk, D], D divisible by n_heads -> [B, Sq, D]
/// Scores are recomputed during backward instead of being stored.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t n_heads);

/// Attention probabilities [B, n_heads, Sq, Sk] for inspection; not differentiable.
Tensor attention_weights(const Tensor& q, const Tensor& k, std::size_t n_heads);

} // namespace tsicl::ad
