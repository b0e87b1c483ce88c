#pragma once

// Straight-line reference for the fusion strategies on plain nested vectors.
// Deliberately shares no code with the library.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

struct Params {
    Mat w_q, w_k, w_v, u_k, u_v, w_k1, w_k2, w_v1, w_v2, gate_w, gate_b;
};

inline Mat mm(const Mat& a, const Mat& b) {
    Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b[0].size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Attention of rows q over keys k with values v, masked keys skipped.
inline Mat attend(const Mat& q, const Mat& k, const Mat& v, double dk, const std::vector<bool>& mask) {
    Mat out(q.size(), std::vector<double>(v[0].size(), 0.0));
    for (std::size_t i = 0; i < q.size(); ++i) {
        std::vector<double> s(k.size(), 0.0);
        double mx = -1e300;
        for (std::size_t j = 0; j < k.size(); ++j) {
            if (!mask.empty() && mask[j]) continue;
            for (std::size_t c = 0; c < q[i].size(); ++c) s[j] += q[i][c] * k[j][c];
            s[j] /= std::sqrt(dk);
            if (s[j] > mx) mx = s[j];
        }
        double z = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) {
            if (!mask.empty() && mask[j]) {
                s[j] = 0.0;
                continue;
            }
            s[j] = std::exp(s[j] - mx);
            z += s[j];
        }
        for (std::size_t j = 0; j < k.size(); ++j)
            for (std::size_t c = 0; c < v[0].size(); ++c) out[i][c] += s[j] / z * v[j][c];
    }
    return out;
}

inline Mat coffee(const Mat& dc, const Mat& dcs, const Params& p, const std::vector<bool>& mask = {}) {
    const std::size_t n = dc.size(), d = dc[0].size(), m = dcs.size();
    const Mat q = mm(dc, p.w_q), k = mm(dc, p.w_k), v = mm(dc, p.w_v);
    Mat pooled(1, std::vector<double>(d, 0.0));
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < d; ++c) pooled[0][c] += dcs[r][c] / static_cast<double>(m);
    const Mat ck = mm(pooled, p.u_k), cv = mm(pooled, p.u_v);
    const double sk = mm(ck, p.w_k2)[0][0], sv = mm(cv, p.w_v2)[0][0];
    const Mat lk = mm(k, p.w_k1), lv = mm(v, p.w_v1);
    Mat kh = k, vh = v;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = sig(lk[i][0] + sk), b = sig(lv[i][0] + sv);
        for (std::size_t c = 0; c < d; ++c) {
            kh[i][c] = (1 - a) * k[i][c] + a * ck[0][c];
            vh[i][c] = (1 - b) * v[i][c] + b * cv[0][c];
        }
    }
    const Mat att = attend(q, kh, vh, static_cast<double>(d), mask);
    Mat out = dc;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            double z = p.gate_b[0][c];
            for (std::size_t r = 0; r < d; ++r) z += dc[i][r] * p.gate_w[r][c] + att[i][r] * p.gate_w[d + r][c];
            out[i][c] = dc[i][c] + sig(z) * att[i][c];
        }
    }
    return out;
}

inline Mat dpa(const Mat& dc, const Mat& dcs, const Params& p) {
    const Mat att = attend(mm(dc, p.w_q), mm(dcs, p.w_k), mm(dcs, p.w_v), static_cast<double>(dc[0].size()), {});
    Mat out = dc;
    for (std::size_t i = 0; i < dc.size(); ++i)
        for (std::size_t c = 0; c < dc[0].size(); ++c) out[i][c] += att[i][c];
    return out;
}

inline Mat run(const std::string& strategy, const Mat& dc, const Mat& dcs, const Params& p) {
    if (strategy == "coffee") return coffee(dc, dcs, p);
    if (strategy == "dpa") return dpa(dc, dcs, p);
    return dc;
}

} // namespace oracle
