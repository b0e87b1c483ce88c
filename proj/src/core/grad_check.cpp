#include "coffee/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "coffee/core/error.hpp"

namespace coffee {

namespace {

double evaluate(const ScalarFunction& f) {
    const Tensor loss = f();
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("grad_check: function must return a 1-element tensor");
    }
    return loss.item();
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

} // namespace

GradCheckReport grad_check(const ScalarFunction& f, std::span<Tensor> params, double eps) {
    if (!(eps >= 1e-6 && eps <= 1e-3)) {
        throw ContractError("grad_check: eps must lie in [1e-6, 1e-3]");
    }

    for (auto& p : params) p.clear_grad();
    const Tensor loss = f();
    const double base = loss.item();
    if (!bit_equal(base, evaluate(f))) {
        throw CheckError("grad_check: function is not deterministic");
    }
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) {
        if (p.has_grad()) {
            analytic.emplace_back(p.grad().begin(), p.grad().end());
        } else {
            analytic.emplace_back(p.numel(), 0.0);
        }
    }

    GradCheckReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto values = params[k].mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double plus = evaluate(f);
            values[i] = saved - eps;
            const double minus = evaluate(f);
            values[i] = saved;

            const double numeric = (plus - minus) / (2.0 * eps);
            const double a = analytic[k][i];
            const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++report.coordinates;
            if (err > report.max_relative_error) {
                report.max_relative_error = err;
                report.worst_param = k;
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    for (auto& p : params) p.clear_grad();
    return report;
}

double grad_check(const ScalarFunction& f, Tensor theta, double eps) {
    Tensor params[] = {std::move(theta)};
    return grad_check(f, params, eps).max_relative_error;
}

} // namespace coffee
