#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coffee/core/parameters.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/core/tensor.hpp"

namespace coffee {

struct FusionParams {
    Tensor w_q, w_k, w_v; // d x d
    Tensor u_k, u_v;      // d x d
    Tensor w_k1, w_k2;    // d x 1
    Tensor w_v1, w_v2;    // d x 1
    Tensor gate_w;        // 2d x d
    Tensor gate_b;        // 1 x d
    std::size_t d_k = 0;

    static FusionParams init(std::size_t d, Rng& rng);
    // All entries zero, gate bias included; handy for hand-built cases.
    static FusionParams zeros(std::size_t d);
    [[nodiscard]] std::size_t d() const { return w_q.rows(); }
    // DimensionError unless every shape matches d.
    void validate() const;
    [[nodiscard]] ParameterList parameters() const;
};

enum class FusionStrategy { coffee, concat, dpa, none };

std::string_view strategy_name(FusionStrategy s);
// StrategyError on anything outside {coffee, concat, dpa, none}.
FusionStrategy strategy_from_name(std::string_view name);
// concat, dpa and coffee consume commonsense; concat does so upstream as text.
bool uses_commonsense(FusionStrategy s);

struct QKV {
    Tensor q, k, v;
};

QKV compute_qkv(const Tensor& d_c, const FusionParams& params);

struct InfusedKV {
    Tensor k_hat, v_hat;
    Tensor lambda_k, lambda_v; // n x 1
    Tensor c_k, c_v;           // broadcast commonsense terms, n x d
};

// D_cs is mean-pooled over its rows, projected by U_k / U_v and broadcast to
// the n rows of K and V. Every row of D_cs is treated as real input.
InfusedKV infuse_kv(const Tensor& k, const Tensor& v, const Tensor& d_cs, const FusionParams& params);

// softmax(Q K^T / sqrt(d_k) + bias) V with bias -1e9 on padded key positions.
// An empty pad_mask means no padding. ContractError if every key is masked.
Tensor context_attention(const Tensor& q, const Tensor& k_hat, const Tensor& v_hat, std::size_t d_k,
                         const std::vector<bool>& pad_mask = {});

// fused = D_c + sigmoid([D_c, D_hat] gate_W + gate_b) * D_hat
Tensor fusion_gate(const Tensor& d_c, const Tensor& d_hat, const FusionParams& params);

struct FusionOutput {
    Tensor fused;
    // Set for the coffee strategy.
    std::optional<Tensor> lambda_k, lambda_v;
};

FusionOutput fuse_detailed(FusionStrategy strategy, const Tensor& d_c, const Tensor& d_cs,
                           const FusionParams& params, const std::vector<bool>& pad_mask = {});
Tensor fuse(FusionStrategy strategy, const Tensor& d_c, const Tensor& d_cs, const FusionParams& params,
            const std::vector<bool>& pad_mask = {});

struct LambdaRecord {
    std::string instance_id;
    double mean_lambda_k = 0.0;
    double mean_lambda_v = 0.0;
};

LambdaRecord lambda_record(const std::string& instance_id, const FusionOutput& out);
// CSV with header instance_id,mean_lambda_k,mean_lambda_v.
void write_lambda_csv(const std::filesystem::path& path, const std::vector<LambdaRecord>& records);

} // namespace coffee
