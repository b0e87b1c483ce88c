#pragma once

#include <functional>
#include <span>
#include <string>

#include "coffee/core/tensor.hpp"

namespace coffee {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
    // Parameter index and flat coordinate of the worst mismatch.
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

using ScalarFunction = std::function<Tensor()>;

// Compares backward() against central differences (f(x+eps) - f(x-eps)) / 2eps
// for every coordinate of every parameter. Per coordinate the error is
// |a - n| / max(1e-8, |a| + |n|); the report carries the maximum.
//
// f must rebuild its graph from the current parameter values on each call.
// Throws ContractError for eps outside [1e-6, 1e-3] and CheckError when two
// evaluations at the same point disagree.
GradCheckReport grad_check(const ScalarFunction& f, std::span<Tensor> params, double eps = 1e-6);

double grad_check(const ScalarFunction& f, Tensor theta, double eps = 1e-6);

} // namespace coffee
