#include "tsicl/model/parameters.hpp"

#include "tsicl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tsicl::model {

namespace {

const char* const kAttentionKinds[] = {"temporal", "channel"};

std::string block_prefix(std::size_t i) { return "block" + std::to_string(i) + "."; }

} // namespace

std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const ModelConfig& c) {
    const std::size_t D = c.d_model;
    const std::size_t F = c.ffn_width();
    std::vector<std::pair<std::string, ad::Shape>> out = {
        {"patch.weight", {c.patch_size, D}},
        {"patch.bias", {D}},
        {"sink", {D}},
        {"role", {2, D}},
        {"position", {c.horizon_patches(), D}},
    };
    for (std::size_t b = 0; b < c.n_blocks; ++b) {
        const std::string p = block_prefix(b);
        for (const char* kind : kAttentionKinds) {
            const std::string a = p + kind + ".";
            out.push_back({a + "ln_gain", {D}});
            out.push_back({a + "ln_bias", {D}});
            for (const char* w : {"q", "k", "v", "o"}) {
                out.push_back({a + "w" + w, {D, D}});
                out.push_back({a + "b" + w, {D}});
            }
        }
        out.push_back({p + "ffn.ln_gain", {D}});
        out.push_back({p + "ffn.ln_bias", {D}});
        out.push_back({p + "ffn.w1", {D, F}});
        out.push_back({p + "ffn.b1", {F}});
        out.push_back({p + "ffn.w2", {F, D}});
        out.push_back({p + "ffn.b2", {D}});
    }
    out.push_back({"final.ln_gain", {D}});
    out.push_back({"final.ln_bias", {D}});
    out.push_back({"head.weight", {D, c.patch_size * 3 * c.n_mixture}});
    out.push_back({"head.bias", {c.patch_size * 3 * c.n_mixture}});
    return out;
}

Parameters Parameters::initialize(const ModelConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double residual_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n_blocks));

    Parameters params;
    for (auto& [name, shape] : parameter_layout(config)) {
        std::vector<double> values(ad::numel_of(shape), 0.0);
        auto fill_normal = [&](double stddev) {
            for (double& v : values) v = stddev * normal(rng);
        };
        auto ends_with = [&](std::string_view suffix) {
            return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
        };
        const double fan_in = static_cast<double>(shape.front());

        if (name == "position") {
            // sinusoidal start, trained from there
            const std::size_t D = shape[1];
            for (std::size_t s = 0; s < shape[0]; ++s) {
                for (std::size_t i = 0; i < D; i += 2) {
                    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(D));
                    values[s * D + i] = std::sin(static_cast<double>(s) * freq);
                    if (i + 1 < D) values[s * D + i + 1] = std::cos(static_cast<double>(s) * freq);
                }
            }
        } else if (name == "sink" || name == "role") {
            fill_normal(1.0);
        } else if (name == "head.weight") {
            fill_normal(0.02);
        } else if (ends_with("ln_gain")) {
            std::fill(values.begin(), values.end(), 1.0);
        } else if (ends_with(".wo") || ends_with("ffn.w2")) {
            fill_normal(residual_scale / std::sqrt(fan_in));
        } else if (shape.size() == 2) {
            fill_normal(1.0 / std::sqrt(fan_in));
        }
        params.add(name, ad::Tensor::from(shape, std::move(values)));
    }
    return params;
}

void Parameters::add(std::string name, ad::Tensor tensor) {
    if (contains(name)) throw ContractError("Parameters::add: duplicate name " + name);
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(tensor));
}

const ad::Tensor& Parameters::get(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return tensors_[i];
    }
    throw ContractError("Parameters: no tensor named " + std::string(name));
}

ad::Tensor& Parameters::get(std::string_view name) {
    return const_cast<ad::Tensor&>(std::as_const(*this).get(name));
}

bool Parameters::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Parameters::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.numel();
    return n;
}

void Parameters::set_requires_grad(bool flag) {
    for (auto& t : tensors_) t.set_requires_grad(flag);
}

void Parameters::zero_grad() {
    for (auto& t : tensors_) t.zero_grad();
}

Parameters Parameters::clone() const {
    Parameters copy;
    for (std::size_t i = 0; i < names_.size(); ++i) copy.add(names_[i], tensors_[i].detach());
    return copy;
}

void Parameters::check_against(const ModelConfig& config) const {
    const auto layout = parameter_layout(config);
    if (layout.size() != names_.size()) {
        throw DimensionError("parameters: expected " + std::to_string(layout.size()) + " tensors, found " +
                             std::to_string(names_.size()));
    }
    for (const auto& [name, shape] : layout) {
        if (!contains(name)) throw DimensionError("parameters: missing tensor " + name);
        if (get(name).shape() != shape) {
            throw DimensionError("parameters: " + name + " has shape " + ad::to_string(get(name).shape()) +
                                 ", expected " + ad::to_string(shape));
        }
    }
}

} // namespace tsicl::model
