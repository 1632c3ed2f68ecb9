#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace tsicl::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);

/// Allocator handing out 64-byte aligned blocks. Vectorized kernels split a
/// buffer into a scalar head and packet body by address, so equal alignment
/// everywhere keeps results bit-identical from run to run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

namespace detail {

struct Node {
    Shape shape;
    Buffer data;
    Buffer grad; // empty until a gradient flows here
    bool requires_grad = false;
    bool is_leaf = true;
    // Reads this node's grad and accumulates into the inputs it captured.
    std::function<void(Node&)> backward;

    Buffer& ensure_grad();
};

} // namespace detail

/// Dense row-major tensor of 64-bit reals.
///
/// A Tensor is a cheap handle; copies share storage. Tensors produced by ops
/// are never mutated afterwards, so they may be read from several threads.
/// Only leaves (parameters) expose mutable storage, for the optimizer.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    [[nodiscard]] bool defined() const { return node_ != nullptr; }
    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::size_t dim(std::size_t axis) const;
    [[nodiscard]] std::size_t rank() const { return shape().size(); }
    [[nodiscard]] std::size_t numel() const;

    [[nodiscard]] std::span<const double> data() const;
    /// Leaf storage for in-place parameter updates. Throws on non-leaves.
    [[nodiscard]] std::span<double> mutable_data();
    [[nodiscard]] double item() const;
    [[nodiscard]] double at(std::initializer_list<std::size_t> index) const;

    [[nodiscard]] bool requires_grad() const;
    Tensor& set_requires_grad(bool flag);
    [[nodiscard]] bool is_leaf() const;
    [[nodiscard]] bool has_grad() const;
    /// Gradient after backward; zeros if nothing reached this tensor.
    [[nodiscard]] std::vector<double> grad() const;
    [[nodiscard]] std::span<double> mutable_grad();
    void zero_grad();

    /// Copy of the values with no autodiff history.
    [[nodiscard]] Tensor detach() const;

    [[nodiscard]] const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Define-by-run recording of differentiable operations.
///
/// Constructing a Tape makes it the active tape of the calling thread until it
/// is destroyed. Ops whose inputs require gradients record themselves on the
/// active tape; with no active tape they run as plain inference.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::shared_ptr<detail::Node> node);
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] bool consumed() const { return consumed_; }

    /// Populate grads of every requires_grad leaf reachable from `loss`.
    /// Leaf grads accumulate; intermediate grads are released afterwards.
    void backward(const Tensor& loss);

private:
    std::vector<std::shared_ptr<detail::Node>> nodes_;
    Tape* previous_ = nullptr;
    bool consumed_ = false;
};

/// Suspends recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    Tape* saved_;
};

} // namespace tsicl::ad
