#include "coffee/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "coffee/core/error.hpp"

namespace coffee {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() > 3) {
        throw DimensionError("tensor rank must be 1..3, got " + std::to_string(dims_.size()));
    }
}

std::size_t Shape::numel() const noexcept {
    if (dims_.empty()) {
        return 0;
    }
    std::size_t n = 1;
    for (auto d : dims_) {
        n *= d;
    }
    return n;
}

std::string Shape::str() const {
    std::string out = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(dims_[i]);
    }
    return out + "]";
}

std::vector<double>& TensorNode::ensure_grad() {
    if (grad.empty() && !value.empty()) {
        grad.assign(value.size(), 0.0);
    }
    return grad;
}

namespace {

std::shared_ptr<TensorNode> new_node(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.numel() != values.size()) {
        throw DimensionError("shape " + shape.str() + " holds " + std::to_string(shape.numel()) +
                             " values, got " + std::to_string(values.size()));
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return node;
}

} // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::vector<double> values(shape.numel(), value);
    return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw DimensionError("ragged matrix literal");
        }
        values.insert(values.end(), row.begin(), row.end());
    }
    return from(Shape{r, c}, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from(Shape{1, 1}, {value}, requires_grad);
}

TensorNode& Tensor::checked() const {
    if (!node_) {
        throw ContractError("use of an undefined tensor");
    }
    return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::size_t Tensor::rows() const {
    const auto& s = shape();
    if (s.rank() != 2) {
        throw DimensionError("expected a rank-2 tensor, got " + s.str());
    }
    return s[0];
}

std::size_t Tensor::cols() const {
    const auto& s = shape();
    if (s.rank() != 2) {
        throw DimensionError("expected a rank-2 tensor, got " + s.str());
    }
    return s[1];
}

std::span<const double> Tensor::data() const { return checked().value; }

std::span<double> Tensor::mutable_data() { return checked().value; }

std::vector<double> Tensor::to_vector() const { return checked().value; }

double Tensor::at(std::size_t r, std::size_t c) const {
    const std::size_t nc = cols();
    if (r >= rows() || c >= nc) {
        throw DimensionError("index out of range");
    }
    return checked().value[r * nc + c];
}

double Tensor::item() const {
    const auto& node = checked();
    if (node.value.size() != 1) {
        throw DimensionError("item() on tensor of shape " + node.shape.str());
    }
    return node.value[0];
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

void Tensor::set_requires_grad(bool on) { checked().requires_grad = on; }

bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const { return checked().grad; }

std::span<double> Tensor::mutable_grad() { return checked().ensure_grad(); }

void Tensor::zero_grad() {
    auto& node = checked();
    if (!node.grad.empty()) {
        std::fill(node.grad.begin(), node.grad.end(), 0.0);
    }
}

void Tensor::clear_grad() { checked().grad.clear(); }

Tensor Tensor::detach() const {
    const auto& node = checked();
    return Tensor(new_node(node.shape, node.value, false));
}

Tensor Tensor::clone() const {
    const auto& node = checked();
    return Tensor(new_node(node.shape, node.value, node.requires_grad));
}

namespace {
thread_local bool t_no_grad = false;
} // namespace

NoGradGuard::NoGradGuard() : previous_(t_no_grad) { t_no_grad = true; }
NoGradGuard::~NoGradGuard() { t_no_grad = previous_; }
bool grad_enabled() noexcept { return !t_no_grad; }

Tensor make_result(std::string_view op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents, TensorNode::BackwardFn backward) {
    for (double v : value) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + ": produced a non-finite value");
        }
    }
    auto node = new_node(std::move(shape), std::move(value), false);
    node->op = op;
    bool tracked = false;
    for (const auto& p : parents) {
        tracked = tracked || (p.requires_grad() && !t_no_grad);
    }
    if (tracked) {
        node->requires_grad = true;
        node->backward = std::move(backward);
        node->parents.reserve(parents.size());
        for (const auto& p : parents) {
            node->parents.push_back(p.node());
        }
    }
    return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward() needs a 1-element loss" +
                            (loss.defined() ? ", got shape " + loss.shape().str() : std::string()));
    }
    if (!loss.requires_grad()) {
        throw ContractError("backward() on a loss that does not depend on any tracked tensor");
    }

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (auto* node : order) {
        if (!node->is_leaf()) {
            node->grad.assign(node->value.size(), 0.0);
        }
    }
    loss.node()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!(*it)->is_leaf()) {
            (*it)->backward(**it);
        }
    }
}

} // namespace coffee
