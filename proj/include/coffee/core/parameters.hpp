#pragma once

#include <string>
#include <vector>

#include "coffee/core/rng.hpp"
#include "coffee/core/tensor.hpp"

namespace coffee {

struct NamedParameter {
    std::string name;
    Tensor tensor;
};

using ParameterList = std::vector<NamedParameter>;

// Trainable leaf drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Tensor normal_init(std::size_t rows, std::size_t cols, double stddev, Rng& rng);
Tensor trainable_full(std::size_t rows, std::size_t cols, double value);

std::vector<Tensor> tensors_of(const ParameterList& params);
void zero_grads(const ParameterList& params);

// Deep copy of parameter values (no history).
ParameterList snapshot(const ParameterList& params);
// Copies values from src into dst; names and shapes must match pairwise.
void restore(const ParameterList& dst, const ParameterList& src);

} // namespace coffee
