#pragma once

#include <cstddef>
#include <vector>

#include "coffee/core/tensor.hpp"

namespace coffee {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Moment buffers are bound to the parameter list given
// at construction, by position.
class Adam {
  public:
    Adam(std::vector<Tensor> params, AdamConfig config);

    // Applies one update as step index t (1-based). Every parameter must
    // carry a gradient; ContractError otherwise.
    void step(std::size_t t);
    // Uses an internal counter starting at 1.
    void step() { step(++t_); }

    [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }
    void set_lr(double lr) { config_.lr = lr; }

  private:
    std::vector<Tensor> params_;
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

} // namespace coffee
