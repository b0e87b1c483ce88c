#include "coffee/core/adam.hpp"

#include <cmath>
#include <string>

#include "coffee/core/error.hpp"

namespace coffee {

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void Adam::step(std::size_t t) {
    if (t == 0) {
        throw ContractError("adam: step index is 1-based");
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
        if (!params_[k].has_grad()) {
            throw ContractError("adam: parameter " + std::to_string(k) + " has no gradient");
        }
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto values = params_[k].mutable_data();
        const auto grad = params_[k].grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            values[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
    t_ = t;
}

} // namespace coffee
