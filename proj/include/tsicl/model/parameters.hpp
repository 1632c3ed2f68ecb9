#pragma once

#include "tsicl/autodiff/tensor.hpp"
#include "tsicl/model/config.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace tsicl::model {

/// Named, ordered collection of trainable tensors.
///
/// Naming scheme:
///   patch.weight [P, D], patch.bias [D]        linear patch embedding
///   sink [D]                                   stands in for unknown horizon targets
///   role [2, D]                                row 0 covariate, row 1 target
///   position [H/P, D]                          one row per patch within a sample
///   block<i>.{temporal,channel}.{ln_gain, ln_bias, wq, bq, wk, bk, wv, bv, wo, bo}
///   block<i>.ffn.{ln_gain, ln_bias, w1, b1, w2, b2}
///   final.ln_gain, final.ln_bias
///   head.weight [D, P*3K], head.bias [P*3K]    GMM head, un-patches one token into P steps
class Parameters {
public:
    Parameters() = default;

    /// Fresh initialization, deterministic in `config.seed`.
    static Parameters initialize(const ModelConfig& config);

    void add(std::string name, ad::Tensor tensor);
    [[nodiscard]] const ad::Tensor& get(std::string_view name) const;
    [[nodiscard]] ad::Tensor& get(std::string_view name);
    [[nodiscard]] bool contains(std::string_view name) const;

    [[nodiscard]] std::size_t size() const { return tensors_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] std::vector<ad::Tensor>& tensors() { return tensors_; }
    [[nodiscard]] const std::vector<ad::Tensor>& tensors() const { return tensors_; }
    [[nodiscard]] std::size_t scalar_count() const;

    void set_requires_grad(bool flag);
    void zero_grad();
    /// Independent copy of every tensor.
    [[nodiscard]] Parameters clone() const;

    /// Throws DimensionError if any tensor is missing or mis-shaped for `config`.
    void check_against(const ModelConfig& config) const;

private:
    std::vector<std::string> names_;
    std::vector<ad::Tensor> tensors_;
};

/// Expected shape of every parameter for a configuration, in canonical order.
std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const ModelConfig& config);

} // namespace tsicl::model
