#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coffee {

// Dimensions of a dense row-major tensor, rank 1 to 3.
class Shape {
  public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);
    explicit Shape(std::vector<std::size_t> dims);

    [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t operator[](std::size_t i) const { return dims_.at(i); }
    [[nodiscard]] std::size_t numel() const noexcept;
    [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;

  private:
    std::vector<std::size_t> dims_;
};

struct TensorNode;

// Handle to a node of the dynamic computation graph. Copies share the node.
//
// Values never change after an op produced them; leaves (parameters) may be
// updated in place through mutable_data() by optimizers and gradient checks.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    // Rank-2 literal, e.g. Tensor::matrix({{1, 2}, {3, 4}}).
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::size_t numel() const { return shape().numel(); }
    // Rank-2 accessors; throw DimensionError on other ranks.
    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] std::size_t cols() const;

    [[nodiscard]] std::span<const double> data() const;
    [[nodiscard]] std::span<double> mutable_data();
    [[nodiscard]] std::vector<double> to_vector() const;
    [[nodiscard]] double at(std::size_t r, std::size_t c) const;
    [[nodiscard]] double item() const;

    [[nodiscard]] bool requires_grad() const;
    void set_requires_grad(bool on);
    [[nodiscard]] bool has_grad() const;
    // Empty span when no gradient has been accumulated.
    [[nodiscard]] std::span<const double> grad() const;
    [[nodiscard]] std::span<double> mutable_grad();
    void zero_grad();
    void clear_grad();

    // Same values, no history, no gradient tracking.
    [[nodiscard]] Tensor detach() const;
    // Deep copy that keeps the requires_grad flag but not the history.
    [[nodiscard]] Tensor clone() const;

    [[nodiscard]] const std::shared_ptr<TensorNode>& node() const noexcept { return node_; }
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  private:
    TensorNode& checked() const;
    std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
    using BackwardFn = std::function<void(TensorNode& out)>;

    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    BackwardFn backward;
    std::string_view op = "leaf";

    std::vector<double>& ensure_grad();
    [[nodiscard]] bool is_leaf() const noexcept { return !backward; }
};

// Builds an op output. The result tracks gradients iff any parent does; the
// backward closure is dropped otherwise. Values are checked for finiteness
// and a NumericError naming the op is raised on NaN/Inf.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents, TensorNode::BackwardFn backward);

// Reverse-mode sweep from a 1-element loss. Leaf gradients accumulate across
// calls; intermediate gradients are recomputed each call.
void backward(const Tensor& loss);

// While alive, ops on the current thread record no history (inference).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

[[nodiscard]] bool grad_enabled() noexcept;

} // namespace coffee
