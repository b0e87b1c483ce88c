#include "coffee/fusion/fusion.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "coffee/core/error.hpp"
#include "coffee/core/ops.hpp"

namespace coffee {

FusionParams FusionParams::init(std::size_t d, Rng& rng) {
    FusionParams p;
    p.w_q = xavier_uniform(d, d, rng);
    p.w_k = xavier_uniform(d, d, rng);
    p.w_v = xavier_uniform(d, d, rng);
    p.u_k = xavier_uniform(d, d, rng);
    p.u_v = xavier_uniform(d, d, rng);
    p.w_k1 = xavier_uniform(d, 1, rng);
    p.w_k2 = xavier_uniform(d, 1, rng);
    p.w_v1 = xavier_uniform(d, 1, rng);
    p.w_v2 = xavier_uniform(d, 1, rng);
    p.gate_w = xavier_uniform(2 * d, d, rng);
    p.gate_b = trainable_full(1, d, 0.0);
    p.d_k = d;
    return p;
}

FusionParams FusionParams::zeros(std::size_t d) {
    FusionParams p;
    p.w_q = trainable_full(d, d, 0.0);
    p.w_k = trainable_full(d, d, 0.0);
    p.w_v = trainable_full(d, d, 0.0);
    p.u_k = trainable_full(d, d, 0.0);
    p.u_v = trainable_full(d, d, 0.0);
    p.w_k1 = trainable_full(d, 1, 0.0);
    p.w_k2 = trainable_full(d, 1, 0.0);
    p.w_v1 = trainable_full(d, 1, 0.0);
    p.w_v2 = trainable_full(d, 1, 0.0);
    p.gate_w = trainable_full(2 * d, d, 0.0);
    p.gate_b = trainable_full(1, d, 0.0);
    p.d_k = d;
    return p;
}

void FusionParams::validate() const {
    const std::size_t d = w_q.rows();
    auto expect = [](const Tensor& t, std::size_t r, std::size_t c, const char* name) {
        if (t.shape().rank() != 2 || t.rows() != r || t.cols() != c) {
            throw DimensionError(fmt::format("fusion parameter {} has shape {}, expected [{}x{}]", name,
                                             t.shape().str(), r, c));
        }
    };
    expect(w_q, d, d, "W_Q");
    expect(w_k, d, d, "W_K");
    expect(w_v, d, d, "W_V");
    expect(u_k, d, d, "U_k");
    expect(u_v, d, d, "U_v");
    expect(w_k1, d, 1, "W_k1");
    expect(w_k2, d, 1, "W_k2");
    expect(w_v1, d, 1, "W_v1");
    expect(w_v2, d, 1, "W_v2");
    expect(gate_w, 2 * d, d, "gate_W");
    expect(gate_b, 1, d, "gate_b");
    if (d_k == 0) throw DimensionError("fusion d_k must be positive");
}

ParameterList FusionParams::parameters() const {
    return {{"fusion.w_q", w_q},   {"fusion.w_k", w_k},   {"fusion.w_v", w_v},   {"fusion.u_k", u_k},
            {"fusion.u_v", u_v},   {"fusion.w_k1", w_k1}, {"fusion.w_k2", w_k2}, {"fusion.w_v1", w_v1},
            {"fusion.w_v2", w_v2}, {"fusion.gate_w", gate_w}, {"fusion.gate_b", gate_b}};
}

std::string_view strategy_name(FusionStrategy s) {
    switch (s) {
    case FusionStrategy::coffee: return "coffee";
    case FusionStrategy::concat: return "concat";
    case FusionStrategy::dpa: return "dpa";
    case FusionStrategy::none: return "none";
    }
    throw StrategyError("invalid fusion strategy discriminant");
}

FusionStrategy strategy_from_name(std::string_view name) {
    for (auto s : {FusionStrategy::coffee, FusionStrategy::concat, FusionStrategy::dpa, FusionStrategy::none}) {
        if (strategy_name(s) == name) return s;
    }
    throw StrategyError("unknown fusion strategy '" + std::string(name) + "' (expected coffee, concat, dpa or none)");
}

bool uses_commonsense(FusionStrategy s) { return s != FusionStrategy::none; }

QKV compute_qkv(const Tensor& d_c, const FusionParams& params) {
    return {matmul(d_c, params.w_q), matmul(d_c, params.w_k), matmul(d_c, params.w_v)};
}

namespace {

// Returns (hat, lambda, c) for one of the K / V branches.
std::tuple<Tensor, Tensor, Tensor> infuse(const Tensor& x, const Tensor& pooled, const Tensor& u,
                                          const Tensor& w1, const Tensor& w2) {
    const std::size_t n = x.rows();
    const Tensor projected = matmul(pooled, u); // 1 x d
    const Tensor lambda = sigmoid(add(matmul(x, w1), broadcast_rows(matmul(projected, w2), n)));
    const Tensor c = broadcast_rows(projected, n);
    const Tensor hat = add(mul_col(x, one_minus(lambda)), mul_col(c, lambda));
    return {hat, lambda, c};
}

} // namespace

InfusedKV infuse_kv(const Tensor& k, const Tensor& v, const Tensor& d_cs, const FusionParams& params) {
    if (d_cs.shape().rank() != 2 || d_cs.rows() == 0) {
        throw EmptyInputError("infuse_kv: commonsense representation has no rows");
    }
    if (k.shape() != v.shape()) {
        throw DimensionError("infuse_kv: K " + k.shape().str() + " and V " + v.shape().str() +
                             " differ");
    }
    const Tensor pooled = mean_pool_rows(d_cs);
    auto [k_hat, lambda_k, c_k] = infuse(k, pooled, params.u_k, params.w_k1, params.w_k2);
    auto [v_hat, lambda_v, c_v] = infuse(v, pooled, params.u_v, params.w_v1, params.w_v2);
    return {k_hat, v_hat, lambda_k, lambda_v, c_k, c_v};
}

Tensor context_attention(const Tensor& q, const Tensor& k_hat, const Tensor& v_hat, std::size_t d_k,
                         const std::vector<bool>& pad_mask) {
    if (k_hat.rows() != v_hat.rows()) {
        throw DimensionError("context_attention: keys " + k_hat.shape().str() + " and values " +
                             v_hat.shape().str() + " differ in rows");
    }
    if (d_k == 0) throw ContractError("context_attention: d_k must be positive");
    Tensor scores = scale(matmul(q, transpose(k_hat)), 1.0 / std::sqrt(static_cast<double>(d_k)));
    if (!pad_mask.empty()) {
        if (pad_mask.size() != k_hat.rows()) {
            throw DimensionError(fmt::format("context_attention: pad mask of length {} for {} keys",
                                             pad_mask.size(), k_hat.rows()));
        }
        std::vector<double> bias(pad_mask.size(), 0.0);
        bool any_open = false;
        for (std::size_t i = 0; i < pad_mask.size(); ++i) {
            if (pad_mask[i]) {
                bias[i] = -1e9;
            } else {
                any_open = true;
            }
        }
        if (!any_open) throw ContractError("context_attention: every key position is masked");
        const std::size_t n = bias.size();
        scores = add_row(scores, Tensor::from(Shape{1, n}, std::move(bias)));
    }
    return matmul(softmax_rows(scores), v_hat);
}

Tensor fusion_gate(const Tensor& d_c, const Tensor& d_hat, const FusionParams& params) {
    if (d_c.shape() != d_hat.shape()) {
        throw DimensionError("fusion_gate: D_c " + d_c.shape().str() + " and attended " +
                             d_hat.shape().str() + " differ");
    }
    const Tensor g = sigmoid(add_row(matmul(concat_cols(d_c, d_hat), params.gate_w), params.gate_b));
    return add(d_c, mul(g, d_hat));
}

FusionOutput fuse_detailed(FusionStrategy strategy, const Tensor& d_c, const Tensor& d_cs,
                           const FusionParams& params, const std::vector<bool>& pad_mask) {
    switch (strategy) {
    case FusionStrategy::none:
    case FusionStrategy::concat:
        return {d_c, std::nullopt, std::nullopt};
    case FusionStrategy::coffee: {
        params.validate();
        const auto qkv = compute_qkv(d_c, params);
        const auto infused = infuse_kv(qkv.k, qkv.v, d_cs, params);
        const auto attended = context_attention(qkv.q, infused.k_hat, infused.v_hat, params.d_k, pad_mask);
        return {fusion_gate(d_c, attended, params), infused.lambda_k, infused.lambda_v};
    }
    case FusionStrategy::dpa: {
        params.validate();
        if (d_cs.shape().rank() != 2 || d_cs.rows() == 0) {
            throw EmptyInputError("fuse: commonsense representation has no rows");
        }
        const Tensor q = matmul(d_c, params.w_q);
        const Tensor k = matmul(d_cs, params.w_k);
        const Tensor v = matmul(d_cs, params.w_v);
        return {add(d_c, context_attention(q, k, v, params.d_k)), std::nullopt, std::nullopt};
    }
    }
    throw StrategyError("invalid fusion strategy discriminant");
}

Tensor fuse(FusionStrategy strategy, const Tensor& d_c, const Tensor& d_cs, const FusionParams& params,
            const std::vector<bool>& pad_mask) {
    return fuse_detailed(strategy, d_c, d_cs, params, pad_mask).fused;
}

LambdaRecord lambda_record(const std::string& instance_id, const FusionOutput& out) {
    auto mean = [](const std::optional<Tensor>& t) {
        if (!t || t->numel() == 0) return 0.0;
        const auto v = t->data();
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    return {instance_id, mean(out.lambda_k), mean(out.lambda_v)};
}

void write_lambda_csv(const std::filesystem::path& path, const std::vector<LambdaRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write lambda telemetry " + path.string());
    out << "instance_id,mean_lambda_k,mean_lambda_v\n";
    for (const auto& r : records) {
        out << fmt::format("{},{:.6f},{:.6f}\n", r.instance_id, r.mean_lambda_k, r.mean_lambda_v);
    }
}

} // namespace coffee
