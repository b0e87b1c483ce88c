#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coffee/core/rng.hpp"
#include "coffee/core/tensor.hpp"

// Differentiable ops on rank-2 tensors. Every op checks shapes and raises
// DimensionError naming both operands on mismatch.
namespace coffee {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
// 1 - a, elementwise.
Tensor one_minus(const Tensor& a);

// a[p x q] + row[1 x q] added to every row.
Tensor add_row(const Tensor& a, const Tensor& row);
// a[p x q] * col[p x 1], each row scaled by its column entry.
Tensor mul_col(const Tensor& a, const Tensor& col);
// row[1 x q] repeated n times.
Tensor broadcast_rows(const Tensor& row, std::size_t n);

Tensor sigmoid(const Tensor& x);
// tanh approximation of GELU; smooth, which keeps finite differences honest.
Tensor gelu(const Tensor& x);

// Row-wise softmax with max subtraction. NaN input raises NumericError.
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

// Column means over all rows; EmptyInputError when there are no rows.
Tensor mean_pool_rows(const Tensor& x);
Tensor sum(const Tensor& x);
// Single entry of a row vector as a 1x1 tensor.
Tensor pick(const Tensor& row, std::size_t index);

// Normalises each row to zero mean / unit variance, then gamma * x + beta.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-5);

// Rows of table selected by ids, in order.
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);

// Inverted dropout. Identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

} // namespace coffee
