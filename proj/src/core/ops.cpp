#include "coffee/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "coffee/core/error.hpp"

namespace coffee {

namespace {

// Gradient buffer of parent i, or nullptr when that parent is untracked.
std::vector<double>* grad_of(TensorNode& out, std::size_t i) {
    auto& parent = *out.parents[i];
    return parent.requires_grad ? &parent.ensure_grad() : nullptr;
}

const std::vector<double>& value_of(const TensorNode& out, std::size_t i) {
    return out.parents[i]->value;
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.shape().rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 operand, got " + t.shape().str());
    }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape().str() + " and " +
                         b.shape().str());
}

void reject_nan(const Tensor& x, const char* op) {
    for (double v : x.data()) {
        if (std::isnan(v)) {
            throw NumericError(std::string(op) + ": NaN input");
        }
    }
}

Tensor elementwise_binary(const char* op, const Tensor& a, const Tensor& b, double sign_b,
                          bool product) {
    if (a.shape() != b.shape()) {
        mismatch(op, a, b);
    }
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = product ? av[i] * bv[i] : av[i] + sign_b * bv[i];
    }
    return make_result(op, a.shape(), std::move(out), {a, b},
                       [sign_b, product](TensorNode& node) {
                           const auto& g = node.grad;
                           const auto& x = value_of(node, 0);
                           const auto& y = value_of(node, 1);
                           if (auto* ga = grad_of(node, 0)) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   (*ga)[i] += product ? g[i] * y[i] : g[i];
                               }
                           }
                           if (auto* gb = grad_of(node, 1)) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   (*gb)[i] += product ? g[i] * x[i] : sign_b * g[i];
                               }
                           }
                       });
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t p = a.rows();
    const std::size_t q = a.cols();
    const std::size_t r = b.cols();
    if (b.rows() != q) {
        mismatch("matmul", a, b);
    }
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(p * r, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < q; ++k) {
            const double aik = av[i * q + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < r; ++j) {
                out[i * r + j] += aik * bv[k * r + j];
            }
        }
    }
    return make_result("matmul", Shape{p, r}, std::move(out), {a, b},
                       [p, q, r](TensorNode& node) {
                           const auto& g = node.grad;
                           const auto& x = value_of(node, 0);
                           const auto& y = value_of(node, 1);
                           if (auto* ga = grad_of(node, 0)) {
                               // dA = G * B^T
                               for (std::size_t i = 0; i < p; ++i) {
                                   for (std::size_t k = 0; k < q; ++k) {
                                       double acc = 0.0;
                                       for (std::size_t j = 0; j < r; ++j) {
                                           acc += g[i * r + j] * y[k * r + j];
                                       }
                                       (*ga)[i * q + k] += acc;
                                   }
                               }
                           }
                           if (auto* gb = grad_of(node, 1)) {
                               // dB = A^T * G
                               for (std::size_t i = 0; i < p; ++i) {
                                   for (std::size_t k = 0; k < q; ++k) {
                                       const double xik = x[i * q + k];
                                       if (xik == 0.0) continue;
                                       for (std::size_t j = 0; j < r; ++j) {
                                           (*gb)[k * r + j] += xik * g[i * r + j];
                                       }
                                   }
                               }
                           }
                       });
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const std::size_t p = a.rows();
    const std::size_t q = a.cols();
    const auto av = a.data();
    std::vector<double> out(p * q);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            out[j * p + i] = av[i * q + j];
        }
    }
    return make_result("transpose", Shape{q, p}, std::move(out), {a}, [p, q](TensorNode& node) {
        if (auto* ga = grad_of(node, 0)) {
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = 0; j < q; ++j) {
                    (*ga)[i * q + j] += node.grad[j * p + i];
                }
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise_binary("add", a, b, 1.0, false); }

Tensor sub(const Tensor& a, const Tensor& b) { return elementwise_binary("sub", a, b, -1.0, false); }

Tensor mul(const Tensor& a, const Tensor& b) { return elementwise_binary("mul", a, b, 1.0, true); }

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= factor;
    return make_result("scale", a.shape(), std::move(out), {a}, [factor](TensorNode& node) {
        if (auto* ga = grad_of(node, 0)) {
            for (std::size_t i = 0; i < node.grad.size(); ++i) (*ga)[i] += factor * node.grad[i];
        }
    });
}

Tensor add_scalar(const Tensor& a, double offset) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v += offset;
    return make_result("add_scalar", a.shape(), std::move(out), {a}, [](TensorNode& node) {
        if (auto* ga = grad_of(node, 0)) {
            for (std::size_t i = 0; i < node.grad.size(); ++i) (*ga)[i] += node.grad[i];
        }
    });
}

Tensor one_minus(const Tensor& a) { return add_scalar(scale(a, -1.0), 1.0); }

Tensor add_row(const Tensor& a, const Tensor& row) {
    require_rank2(a, "add_row");
    require_rank2(row, "add_row");
    const std::size_t p = a.rows();
    const std::size_t q = a.cols();
    if (row.rows() != 1 || row.cols() != q) {
        mismatch("add_row", a, row);
    }
    const auto av = a.data();
    const auto rv = row.data();
    std::vector<double> out(p * q);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) out[i * q + j] = av[i * q + j] + rv[j];
    }
    return make_result("add_row", a.shape(), std::move(out), {a, row}, [p, q](TensorNode& node) {
        const auto& g = node.grad;
        if (auto* ga = grad_of(node, 0)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
        if (auto* gr = grad_of(node, 1)) {
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = 0; j < q; ++j) (*gr)[j] += g[i * q + j];
            }
        }
    });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
    require_rank2(a, "mul_col");
    require_rank2(col, "mul_col");
    const std::size_t p = a.rows();
    const std::size_t q = a.cols();
    if (col.rows() != p || col.cols() != 1) {
        mismatch("mul_col", a, col);
    }
    const auto av = a.data();
    const auto cv = col.data();
    std::vector<double> out(p * q);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) out[i * q + j] = av[i * q + j] * cv[i];
    }
    return make_result("mul_col", a.shape(), std::move(out), {a, col}, [p, q](TensorNode& node) {
        const auto& g = node.grad;
        const auto& x = value_of(node, 0);
        const auto& c = value_of(node, 1);
        if (auto* ga = grad_of(node, 0)) {
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = 0; j < q; ++j) (*ga)[i * q + j] += g[i * q + j] * c[i];
            }
        }
        if (auto* gc = grad_of(node, 1)) {
            for (std::size_t i = 0; i < p; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < q; ++j) acc += g[i * q + j] * x[i * q + j];
                (*gc)[i] += acc;
            }
        }
    });
}

Tensor broadcast_rows(const Tensor& row, std::size_t n) {
    require_rank2(row, "broadcast_rows");
    if (row.rows() != 1) {
        throw DimensionError("broadcast_rows: expected a 1xq row, got " + row.shape().str());
    }
    const std::size_t q = row.cols();
    const auto rv = row.data();
    std::vector<double> out(n * q);
    for (std::size_t i = 0; i < n; ++i) std::copy(rv.begin(), rv.end(), out.begin() + i * q);
    return make_result("broadcast_rows", Shape{n, q}, std::move(out), {row},
                       [n, q](TensorNode& node) {
                           if (auto* gr = grad_of(node, 0)) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   for (std::size_t j = 0; j < q; ++j) {
                                       (*gr)[j] += node.grad[i * q + j];
                                   }
                               }
                           }
                       });
}

Tensor sigmoid(const Tensor& x) {
    reject_nan(x, "sigmoid");
    std::vector<double> out(x.numel());
    const auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = xv[i];
        // Branch keeps exp() from overflowing for large |v|.
        if (v >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            out[i] = e / (1.0 + e);
        }
    }
    return make_result("sigmoid", x.shape(), std::move(out), {x}, [](TensorNode& node) {
        if (auto* gx = grad_of(node, 0)) {
            for (std::size_t i = 0; i < node.grad.size(); ++i) {
                const double s = node.value[i];
                (*gx)[i] += node.grad[i] * s * (1.0 - s);
            }
        }
    });
}

Tensor gelu(const Tensor& x) {
    constexpr double k = 0.044715;
    const double c = std::sqrt(2.0 / std::numbers::pi);
    std::vector<double> out(x.numel());
    const auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = xv[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v)));
    }
    return make_result("gelu", x.shape(), std::move(out), {x}, [c](TensorNode& node) {
        if (auto* gx = grad_of(node, 0)) {
            const auto& xs = value_of(node, 0);
            for (std::size_t i = 0; i < node.grad.size(); ++i) {
                const double v = xs[i];
                const double t = std::tanh(c * (v + k * v * v * v));
                const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * c * (1.0 + 3.0 * k * v * v);
                (*gx)[i] += node.grad[i] * d;
            }
        }
    });
}

Tensor softmax_rows(const Tensor& x) {
    require_rank2(x, "softmax_rows");
    reject_nan(x, "softmax_rows");
    const std::size_t p = x.rows();
    const std::size_t q = x.cols();
    const auto xv = x.data();
    std::vector<double> out(p * q);
    for (std::size_t i = 0; i < p; ++i) {
        const auto row = xv.subspan(i * q, q);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            out[i * q + j] = std::exp(row[j] - mx);
            total += out[i * q + j];
        }
        for (std::size_t j = 0; j < q; ++j) out[i * q + j] /= total;
    }
    return make_result("softmax_rows", x.shape(), std::move(out), {x}, [p, q](TensorNode& node) {
        if (auto* gx = grad_of(node, 0)) {
            const auto& y = node.value;
            const auto& g = node.grad;
            for (std::size_t i = 0; i < p; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < q; ++j) dot += g[i * q + j] * y[i * q + j];
                for (std::size_t j = 0; j < q; ++j) {
                    (*gx)[i * q + j] += y[i * q + j] * (g[i * q + j] - dot);
                }
            }
        }
    });
}

Tensor log_softmax_rows(const Tensor& x) {
    require_rank2(x, "log_softmax_rows");
    reject_nan(x, "log_softmax_rows");
    const std::size_t p = x.rows();
    const std::size_t q = x.cols();
    const auto xv = x.data();
    std::vector<double> out(p * q);
    for (std::size_t i = 0; i < p; ++i) {
        const auto row = xv.subspan(i * q, q);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t j = 0; j < q; ++j) total += std::exp(row[j] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t j = 0; j < q; ++j) out[i * q + j] = row[j] - lse;
    }
    return make_result("log_softmax_rows", x.shape(), std::move(out), {x}, [p, q](TensorNode& node) {
        if (auto* gx = grad_of(node, 0)) {
            const auto& y = node.value;
            const auto& g = node.grad;
            for (std::size_t i = 0; i < p; ++i) {
                double gsum = 0.0;
                for (std::size_t j = 0; j < q; ++j) gsum += g[i * q + j];
                for (std::size_t j = 0; j < q; ++j) {
                    (*gx)[i * q + j] += g[i * q + j] - std::exp(y[i * q + j]) * gsum;
                }
            }
        }
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    const Tensor parts[] = {a, b};
    return concat_cols(parts);
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw EmptyInputError("concat_cols: no operands");
    }
    for (const auto& t : parts) require_rank2(t, "concat_cols");
    const std::size_t p = parts.front().rows();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& t : parts) {
        if (t.rows() != p) {
            mismatch("concat_cols", parts.front(), t);
        }
        widths.push_back(t.cols());
        total += t.cols();
    }
    std::vector<double> out(p * total);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto v = parts[k].data();
        const std::size_t w = widths[k];
        for (std::size_t i = 0; i < p; ++i) {
            std::copy_n(v.begin() + i * w, w, out.begin() + i * total + offset);
        }
        offset += w;
    }
    return make_result("concat_cols", Shape{p, total}, std::move(out),
                       std::vector<Tensor>(parts.begin(), parts.end()),
                       [p, total, widths](TensorNode& node) {
                           std::size_t off = 0;
                           for (std::size_t k = 0; k < widths.size(); ++k) {
                               const std::size_t w = widths[k];
                               if (auto* gk = grad_of(node, k)) {
                                   for (std::size_t i = 0; i < p; ++i) {
                                       for (std::size_t j = 0; j < w; ++j) {
                                           (*gk)[i * w + j] += node.grad[i * total + off + j];
                                       }
                                   }
                               }
                               off += w;
                           }
                       });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
    require_rank2(x, "slice_rows");
    const std::size_t q = x.cols();
    if (begin > end || end > x.rows()) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") outside " + x.shape().str());
    }
    const auto xv = x.data();
    std::vector<double> out(xv.begin() + begin * q, xv.begin() + end * q);
    return make_result("slice_rows", Shape{end - begin, q}, std::move(out), {x},
                       [begin, q](TensorNode& node) {
                           if (auto* gx = grad_of(node, 0)) {
                               for (std::size_t i = 0; i < node.grad.size(); ++i) {
                                   (*gx)[begin * q + i] += node.grad[i];
                               }
                           }
                       });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    require_rank2(x, "slice_cols");
    const std::size_t p = x.rows();
    const std::size_t q = x.cols();
    if (begin > end || end > q) {
        throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") outside " + x.shape().str());
    }
    const std::size_t w = end - begin;
    const auto xv = x.data();
    std::vector<double> out(p * w);
    for (std::size_t i = 0; i < p; ++i) {
        std::copy_n(xv.begin() + i * q + begin, w, out.begin() + i * w);
    }
    return make_result("slice_cols", Shape{p, w}, std::move(out), {x},
                       [p, q, w, begin](TensorNode& node) {
                           if (auto* gx = grad_of(node, 0)) {
                               for (std::size_t i = 0; i < p; ++i) {
                                   for (std::size_t j = 0; j < w; ++j) {
                                       (*gx)[i * q + begin + j] += node.grad[i * w + j];
                                   }
                               }
                           }
                       });
}

Tensor mean_pool_rows(const Tensor& x) {
    require_rank2(x, "mean_pool_rows");
    const std::size_t m = x.rows();
    const std::size_t d = x.cols();
    if (m == 0) {
        throw EmptyInputError("mean_pool_rows: input has no rows");
    }
    const auto xv = x.data();
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[j] += xv[i * d + j];
    }
    for (auto& v : out) v /= static_cast<double>(m);
    return make_result("mean_pool_rows", Shape{1, d}, std::move(out), {x}, [m, d](TensorNode& node) {
        if (auto* gx = grad_of(node, 0)) {
            const double inv = 1.0 / static_cast<double>(m);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < d; ++j) (*gx)[i * d + j] += node.grad[j] * inv;
            }
        }
    });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    return make_result("sum", Shape{1, 1}, {total}, {x}, [](TensorNode& node) {
        if (auto* gx = grad_of(node, 0)) {
            for (auto& g : *gx) g += node.grad[0];
        }
    });
}

Tensor pick(const Tensor& row, std::size_t index) {
    require_rank2(row, "pick");
    if (row.rows() != 1 || index >= row.cols()) {
        throw DimensionError("pick: index " + std::to_string(index) + " outside " + row.shape().str());
    }
    return make_result("pick", Shape{1, 1}, {row.data()[index]}, {row}, [index](TensorNode& node) {
        if (auto* gr = grad_of(node, 0)) (*gr)[index] += node.grad[0];
    });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_rank2(x, "layer_norm_rows");
    const std::size_t p = x.rows();
    const std::size_t q = x.cols();
    if (gamma.shape() != Shape{1, q}) mismatch("layer_norm_rows", x, gamma);
    if (beta.shape() != Shape{1, q}) mismatch("layer_norm_rows", x, beta);
    const auto xv = x.data();
    const auto gv = gamma.data();
    const auto bv = beta.data();
    std::vector<double> normed(p * q);
    std::vector<double> rstd(p);
    std::vector<double> out(p * q);
    for (std::size_t i = 0; i < p; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < q; ++j) mean += xv[i * q + j];
        mean /= static_cast<double>(q);
        double var = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            const double c = xv[i * q + j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(q);
        rstd[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < q; ++j) {
            normed[i * q + j] = (xv[i * q + j] - mean) * rstd[i];
            out[i * q + j] = gv[j] * normed[i * q + j] + bv[j];
        }
    }
    return make_result(
        "layer_norm_rows", x.shape(), std::move(out), {x, gamma, beta},
        [p, q, normed = std::move(normed), rstd = std::move(rstd)](TensorNode& node) {
            const auto& g = node.grad;
            const auto& gam = value_of(node, 1);
            if (auto* gg = grad_of(node, 1)) {
                for (std::size_t i = 0; i < p; ++i) {
                    for (std::size_t j = 0; j < q; ++j) (*gg)[j] += g[i * q + j] * normed[i * q + j];
                }
            }
            if (auto* gb = grad_of(node, 2)) {
                for (std::size_t i = 0; i < p; ++i) {
                    for (std::size_t j = 0; j < q; ++j) (*gb)[j] += g[i * q + j];
                }
            }
            if (auto* gx = grad_of(node, 0)) {
                const double inv_q = 1.0 / static_cast<double>(q);
                for (std::size_t i = 0; i < p; ++i) {
                    double mean_d = 0.0;
                    double mean_dn = 0.0;
                    for (std::size_t j = 0; j < q; ++j) {
                        const double dn = g[i * q + j] * gam[j];
                        mean_d += dn;
                        mean_dn += dn * normed[i * q + j];
                    }
                    mean_d *= inv_q;
                    mean_dn *= inv_q;
                    for (std::size_t j = 0; j < q; ++j) {
                        const double dn = g[i * q + j] * gam[j];
                        (*gx)[i * q + j] += rstd[i] * (dn - mean_d - normed[i * q + j] * mean_dn);
                    }
                }
            }
        });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
    require_rank2(table, "embedding_lookup");
    const std::size_t v = table.rows();
    const std::size_t d = table.cols();
    const auto tv = table.data();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= v) {
            throw DimensionError("embedding_lookup: id " + std::to_string(ids[i]) +
                                 " outside table " + table.shape().str());
        }
        std::copy_n(tv.begin() + ids[i] * d, d, out.begin() + i * d);
    }
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    return make_result("embedding_lookup", Shape{ids.size(), d}, std::move(out), {table},
                       [d, rows = std::move(rows)](TensorNode& node) {
                           if (auto* gt = grad_of(node, 0)) {
                               for (std::size_t i = 0; i < rows.size(); ++i) {
                                   for (std::size_t j = 0; j < d; ++j) {
                                       (*gt)[rows[i] * d + j] += node.grad[i * d + j];
                                   }
                               }
                           }
                       });
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ContractError("dropout: rate must be in [0, 1)");
    }
    if (rate == 0.0) {
        return x;
    }
    const double keep = 1.0 - rate;
    std::vector<double> mask(x.numel());
    for (auto& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    const auto xv = x.data();
    std::vector<double> out(mask.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    return make_result("dropout", x.shape(), std::move(out), {x},
                       [mask = std::move(mask)](TensorNode& node) {
                           if (auto* gx = grad_of(node, 0)) {
                               for (std::size_t i = 0; i < mask.size(); ++i) {
                                   (*gx)[i] += node.grad[i] * mask[i];
                               }
                           }
                       });
}

} // namespace coffee
