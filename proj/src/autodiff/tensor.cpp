#include "tsicl/autodiff/tensor.hpp"

#include "tsicl/errors.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace tsicl::ad {

namespace {
thread_local Tape* current_tape = nullptr;
}

std::size_t numel_of(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Buffer& detail::Node::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
    auto node = std::make_shared<detail::Node>();
    node->data.assign(numel_of(shape), value);
    node->shape = std::move(shape);
    return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    if (numel_of(shape) != values.size()) {
        throw DimensionError("Tensor::from: shape " + to_string(shape) + " needs " +
                             std::to_string(numel_of(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->data.assign(values.begin(), values.end());
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             to_string(shape()));
    }
    return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->data.size(); }

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() {
    if (!node_->is_leaf) throw ContractError("mutable_data: tensor is not a leaf");
    return node_->data;
}

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item: tensor of shape " + to_string(shape()) + " is not a scalar");
    return node_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank()) {
        throw DimensionError("at: index rank " + std::to_string(index.size()) + " vs shape " +
                             to_string(shape()));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= node_->shape[axis]) throw DimensionError("at: index out of range");
        flat = flat * node_->shape[axis] + i;
        ++axis;
    }
    return node_->data[flat];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
    if (!node_->is_leaf) throw ContractError("set_requires_grad: only leaves can be toggled");
    node_->requires_grad = flag;
    return *this;
}

bool Tensor::is_leaf() const { return node_->is_leaf; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::vector<double> Tensor::grad() const {
    if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
    return {node_->grad.begin(), node_->grad.end()};
}

std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const { return from(shape(), {node_->data.begin(), node_->data.end()}); }

Tape::Tape() : previous_(current_tape) { current_tape = this; }

Tape::~Tape() { current_tape = previous_; }

Tape* Tape::active() { return current_tape; }

void Tape::record(std::shared_ptr<detail::Node> node) {
    if (consumed_) throw ContractError("Tape::record: tape already ran backward");
    nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw ContractError("backward: this tape already ran backward; re-run the forward pass");
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward: loss must be a scalar, got shape " +
                            (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
    }
    if (nodes_.empty()) throw ContractError("backward: tape is empty");
    if (!loss.requires_grad()) throw ContractError("backward: loss does not depend on any trainable tensor");

    loss.node()->ensure_grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        detail::Node& node = **it;
        if (!node.grad.empty() && node.backward) node.backward(node);
        node.backward = nullptr;
        node.grad.clear();
        node.grad.shrink_to_fit();
    }
    consumed_ = true;
}

NoGradGuard::NoGradGuard() : saved_(current_tape) { current_tape = nullptr; }

NoGradGuard::~NoGradGuard() { current_tape = saved_; }

} // namespace tsicl::ad
