#include "coffee/core/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "coffee/core/error.hpp"

namespace coffee {

Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = rng.uniform(-bound, bound);
    return Tensor::from(Shape{rows, cols}, std::move(values), true);
}

Tensor normal_init(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = rng.normal(0.0, stddev);
    return Tensor::from(Shape{rows, cols}, std::move(values), true);
}

Tensor trainable_full(std::size_t rows, std::size_t cols, double value) {
    return Tensor::full(Shape{rows, cols}, value, true);
}

std::vector<Tensor> tensors_of(const ParameterList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.tensor);
    return out;
}

void zero_grads(const ParameterList& params) {
    for (auto p : params) p.tensor.zero_grad();
}

ParameterList snapshot(const ParameterList& params) {
    ParameterList out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back({p.name, p.tensor.detach()});
    return out;
}

void restore(const ParameterList& dst, const ParameterList& src) {
    if (dst.size() != src.size()) {
        throw IntegrityError("parameter count mismatch: " + std::to_string(dst.size()) + " vs " +
                             std::to_string(src.size()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].name != src[i].name) {
            throw IntegrityError("parameter name mismatch: '" + dst[i].name + "' vs '" +
                                 src[i].name + "'");
        }
        if (dst[i].tensor.shape() != src[i].tensor.shape()) {
            throw DimensionError("parameter '" + dst[i].name + "' has shape " +
                                 dst[i].tensor.shape().str() + ", source has " +
                                 src[i].tensor.shape().str());
        }
        Tensor target = dst[i].tensor;
        auto values = src[i].tensor.data();
        std::copy(values.begin(), values.end(), target.mutable_data().begin());
    }
}

} // namespace coffee
