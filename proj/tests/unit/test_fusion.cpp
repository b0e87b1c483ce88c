#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "coffee/core/error.hpp"
#include "coffee/core/grad_check.hpp"
#include "coffee/core/ops.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/fusion/fusion.hpp"
#include "fusion_oracle.hpp"

using namespace coffee;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0, bool grad = false) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.uniform(-scale, scale);
    return Tensor::from(Shape{r, c}, std::move(v), grad);
}

oracle::Mat to_mat(const Tensor& t) {
    oracle::Mat m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

FusionParams random_params(std::size_t d, Rng& rng, bool grad = false) {
    FusionParams p;
    p.w_q = random_matrix(d, d, rng, 1.0, grad);
    p.w_k = random_matrix(d, d, rng, 1.0, grad);
    p.w_v = random_matrix(d, d, rng, 1.0, grad);
    p.u_k = random_matrix(d, d, rng, 1.0, grad);
    p.u_v = random_matrix(d, d, rng, 1.0, grad);
    p.w_k1 = random_matrix(d, 1, rng, 1.0, grad);
    p.w_k2 = random_matrix(d, 1, rng, 1.0, grad);
    p.w_v1 = random_matrix(d, 1, rng, 1.0, grad);
    p.w_v2 = random_matrix(d, 1, rng, 1.0, grad);
    p.gate_w = random_matrix(2 * d, d, rng, 1.0, grad);
    p.gate_b = random_matrix(1, d, rng, 1.0, grad);
    p.d_k = d;
    return p;
}

oracle::Params to_oracle(const FusionParams& p) {
    return {to_mat(p.w_q),  to_mat(p.w_k),  to_mat(p.w_v),  to_mat(p.u_k),    to_mat(p.u_v), to_mat(p.w_k1),
            to_mat(p.w_k2), to_mat(p.w_v1), to_mat(p.w_v2), to_mat(p.gate_w), to_mat(p.gate_b)};
}

double max_abs_diff(const Tensor& a, const oracle::Mat& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::fabs(a.at(i, j) - b[i][j]));
    return worst;
}

Tensor eye(std::size_t d) {
    auto t = Tensor::zeros(Shape{d, d});
    for (std::size_t i = 0; i < d; ++i) t.mutable_data()[i * d + i] = 1.0;
    return t;
}

} // namespace

TEST_CASE("compute_qkv examples") {
    Rng rng(1);
    auto dc = random_matrix(3, 2, rng);
    auto p = FusionParams::zeros(2);
    p.w_q = p.w_k = p.w_v = eye(2);
    auto qkv = compute_qkv(dc, p);
    CHECK(qkv.q.to_vector() == dc.to_vector());
    CHECK(qkv.v.to_vector() == dc.to_vector());
    auto z = compute_qkv(dc, FusionParams::zeros(2));
    for (double v : z.k.data()) CHECK(v == 0.0);
    auto p2 = FusionParams::zeros(2);
    p2.w_q = Tensor::matrix({{1, 0}, {1, 1}});
    CHECK(compute_qkv(Tensor::matrix({{1, 2}}), p2).q.to_vector() == std::vector<double>{3, 2});
    CHECK_THROWS_AS(compute_qkv(random_matrix(2, 3, rng), p2), DimensionError);
}

TEST_CASE("infuse_kv examples") {
    Rng rng(2);
    auto p = FusionParams::zeros(2);
    p.u_k = p.u_v = eye(2);
    auto k = random_matrix(3, 2, rng), v = random_matrix(3, 2, rng), dcs = random_matrix(2, 2, rng);
    auto r = infuse_kv(k, v, dcs, p);
    const auto pooled = mean_pool_rows(dcs);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r.lambda_k.at(i, 0) == 0.5);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(r.k_hat.at(i, c) == doctest::Approx(0.5 * k.at(i, c) + 0.5 * pooled.at(0, c)));
        }
    }
    // Zero commonsense with identity U_k: only K survives, scaled by 1 - lambda.
    auto p0 = FusionParams::zeros(2);
    p0.u_k = eye(2);
    p0.w_k1 = Tensor::matrix({{0.3}, {-0.7}});
    auto z = infuse_kv(k, v, Tensor::zeros(Shape{2, 2}), p0);
    for (std::size_t i = 0; i < 3; ++i) {
        const double lam = 1.0 / (1.0 + std::exp(-(0.3 * k.at(i, 0) - 0.7 * k.at(i, 1))));
        CHECK(z.lambda_k.at(i, 0) == doctest::Approx(lam).epsilon(1e-12));
        CHECK(z.k_hat.at(i, 0) == doctest::Approx((1 - lam) * k.at(i, 0)).epsilon(1e-12));
    }
    auto p1 = FusionParams::zeros(1);
    p1.u_k = p1.u_v = Tensor::matrix({{1}});
    auto one = infuse_kv(Tensor::matrix({{2}}), Tensor::matrix({{2}}), Tensor::matrix({{1}}), p1);
    CHECK(one.lambda_k.item() == 0.5);
    CHECK(one.k_hat.item() == doctest::Approx(1.5));
    CHECK_THROWS_AS(infuse_kv(k, v, Tensor::zeros(Shape{0, 2}), p), EmptyInputError);
}

TEST_CASE("context_attention examples") {
    auto single = context_attention(Tensor::matrix({{0.3, -2}}), Tensor::matrix({{5, 1}}), Tensor::matrix({{7, 8}}), 2);
    CHECK(single.to_vector() == std::vector<double>{7, 8});

    auto same = context_attention(Tensor::matrix({{1, 2}, {-3, 0.5}}), Tensor::matrix({{1, 1}, {1, 1}}),
                                  Tensor::matrix({{2, 4}, {6, 0}}), 2);
    CHECK(same.at(0, 0) == doctest::Approx(4.0));
    CHECK(same.at(1, 1) == doctest::Approx(2.0));

    auto out = context_attention(Tensor::matrix({{1}, {0}}), Tensor::matrix({{1}, {0}}), Tensor::matrix({{10}, {20}}), 1);
    CHECK(out.at(0, 0) == doctest::Approx(12.689).epsilon(1e-4));
    CHECK(out.at(1, 0) == doctest::Approx(15.0));

    auto masked = context_attention(Tensor::matrix({{1}, {0}}), Tensor::matrix({{1}, {0}}),
                                    Tensor::matrix({{10}, {20}}), 1, {false, true});
    CHECK(masked.at(0, 0) == 10.0);
    CHECK(masked.at(1, 0) == 10.0);
    CHECK_THROWS_AS(context_attention(Tensor::matrix({{1}}), Tensor::matrix({{1}}), Tensor::matrix({{1}}), 1, {true}),
                    ContractError);
}

TEST_CASE("fusion_gate examples") {
    Rng rng(3);
    auto dc = random_matrix(3, 2, rng), dh = random_matrix(3, 2, rng);
    auto p = FusionParams::zeros(2);
    p.gate_b = Tensor::full(Shape{1, 2}, -40.0);
    auto closed = fusion_gate(dc, dh, p);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::fabs(closed.data()[i] - dc.data()[i]) < 1e-12);
    p.gate_b = Tensor::full(Shape{1, 2}, 40.0);
    auto open = fusion_gate(dc, dh, p);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::fabs(open.data()[i] - dc.data()[i] - dh.data()[i]) < 1e-12);
    auto p1 = FusionParams::zeros(1);
    CHECK(fusion_gate(Tensor::matrix({{1}}), Tensor::matrix({{2}}), p1).item() == 2.0);
    CHECK_THROWS_AS(fusion_gate(dc, random_matrix(2, 2, rng), p), DimensionError);
}

TEST_CASE("fuse strategies") {
    Rng rng(4);
    auto dc = random_matrix(3, 2, rng), dcs = random_matrix(2, 2, rng);
    auto p = random_params(2, rng);
    CHECK(fuse(FusionStrategy::none, dc, dcs, p).to_vector() == dc.to_vector());
    CHECK(fuse(FusionStrategy::concat, dc, dcs, p).to_vector() == dc.to_vector());
    auto closed = p;
    closed.gate_b = Tensor::full(Shape{1, 2}, -40.0);
    closed.gate_w = Tensor::zeros(Shape{4, 2});
    auto c = fuse(FusionStrategy::coffee, dc, dcs, closed);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::fabs(c.data()[i] - dc.data()[i]) < 1e-9);
    // One commonsense row: every query attends fully to it.
    auto one = random_matrix(1, 2, rng);
    auto d = fuse(FusionStrategy::dpa, dc, one, p);
    const auto v = matmul(one, p.w_v);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(d.at(i, j) == doctest::Approx(dc.at(i, j) + v.at(0, j)));
    CHECK_THROWS_AS(strategy_from_name("sum"), StrategyError);
    CHECK(strategy_from_name("dpa") == FusionStrategy::dpa);
    CHECK_THROWS_AS(fuse(static_cast<FusionStrategy>(9), dc, dcs, p), StrategyError);
}

TEST_CASE("fusion matches the straight-line oracle") {
    Rng rng(5);
    for (std::size_t n = 1; n <= 3; ++n)
        for (std::size_t m = 1; m <= 2; ++m)
            for (std::size_t d = 1; d <= 2; ++d)
                for (int draw = 0; draw < 20; ++draw) {
                    auto dc = random_matrix(n, d, rng, 2.0), dcs = random_matrix(m, d, rng, 2.0);
                    auto p = random_params(d, rng);
                    const auto op = to_oracle(p);
                    for (auto s : {FusionStrategy::coffee, FusionStrategy::dpa, FusionStrategy::concat,
                                   FusionStrategy::none}) {
                        const auto got = fuse(s, dc, dcs, p);
                        CHECK(max_abs_diff(got, oracle::run(std::string(strategy_name(s)), to_mat(dc), to_mat(dcs), op)) <
                              1e-10);
                    }
                }
}

TEST_CASE("lambda bounds and convexity on fuzzed inputs") {
    Rng rng(6);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(3), d = 1 + rng.below(3);
        auto p = random_params(d, rng);
        auto k = random_matrix(n, d, rng, 3.0), v = random_matrix(n, d, rng, 3.0), dcs = random_matrix(m, d, rng, 3.0);
        auto r = infuse_kv(k, v, dcs, p);
        for (double l : r.lambda_k.data()) CHECK((l > 0.0 && l < 1.0));
        for (double l : r.lambda_v.data()) CHECK((l > 0.0 && l < 1.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < d; ++c) {
                const double lo = std::min(k.at(i, c), r.c_k.at(i, c)), hi = std::max(k.at(i, c), r.c_k.at(i, c));
                CHECK(r.k_hat.at(i, c) >= lo - 1e-12);
                CHECK(r.k_hat.at(i, c) <= hi + 1e-12);
            }
    }
}

TEST_CASE("coffee path gradients") {
    Rng rng(7);
    auto p = random_params(3, rng, true);
    p.gate_b = random_matrix(1, 3, rng, 0.5, true);
    auto dc = random_matrix(4, 3, rng, 1.0, true), dcs = random_matrix(2, 3, rng, 1.0, true);
    auto params = p.parameters();
    std::vector<Tensor> all = {dc, dcs};
    for (auto& np : params) all.push_back(np.tensor);
    auto f = [&] { return sum(mul(fuse(FusionStrategy::coffee, dc, dcs, p, {false, false, false, true}), dc)); };
    CHECK(grad_check(f, all).max_relative_error < 1e-5);
    auto g = [&] { return sum(fuse(FusionStrategy::dpa, dc, dcs, p)); };
    CHECK(grad_check(g, all).max_relative_error < 1e-5);
}

TEST_CASE("lambda telemetry") {
    Rng rng(8);
    auto out = fuse_detailed(FusionStrategy::coffee, random_matrix(3, 2, rng), random_matrix(2, 2, rng), random_params(2, rng));
    REQUIRE(out.lambda_k);
    const auto rec = lambda_record("d#0", out);
    CHECK(rec.mean_lambda_k > 0.0);
    CHECK(rec.mean_lambda_k < 1.0);
    const auto path = std::filesystem::temp_directory_path() / "coffee_lambda.csv";
    write_lambda_csv(path, {rec});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "instance_id,mean_lambda_k,mean_lambda_v");
    std::filesystem::remove(path);
}
