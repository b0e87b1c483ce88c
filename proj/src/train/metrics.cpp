#include "coffee/train/metrics.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "coffee/core/error.hpp"

namespace coffee {

EvalReport compute_report(std::span<const std::size_t> gold, std::span<const std::size_t> predicted) {
    if (gold.size() != predicted.size()) {
        throw ContractError(fmt::format("compute_report: {} gold labels against {} predictions", gold.size(),
                                        predicted.size()));
    }
    if (gold.empty()) {
        throw EmptyInputError("compute_report: no predictions to score");
    }
    EvalReport r;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] >= kEmotionCount || predicted[i] >= kEmotionCount) {
            throw LabelError(fmt::format("compute_report: label index out of range at position {}", i));
        }
        ++r.confusion[gold[i]][predicted[i]];
    }
    r.total = gold.size();
    std::size_t correct = 0;
    double weighted = 0.0;
    for (std::size_t c = 0; c < kEmotionCount; ++c) {
        std::size_t predicted_c = 0;
        for (std::size_t g = 0; g < kEmotionCount; ++g) {
            r.support[c] += r.confusion[c][g];
            predicted_c += r.confusion[g][c];
        }
        const std::size_t tp = r.confusion[c][c];
        correct += tp;
        r.precision[c] = predicted_c ? static_cast<double>(tp) / static_cast<double>(predicted_c) : 0.0;
        r.recall[c] = r.support[c] ? static_cast<double>(tp) / static_cast<double>(r.support[c]) : 0.0;
        const double pr = r.precision[c] + r.recall[c];
        r.per_class_f1[c] = pr > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / pr : 0.0;
        weighted += static_cast<double>(r.support[c]) * r.per_class_f1[c];
    }
    r.weighted_f1 = weighted / static_cast<double>(r.total);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    return r;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < kEmotionCount; ++c) {
        per_class[std::string(kEmotionNames[c])] = {{"precision", report.precision[c]},
                                                    {"recall", report.recall[c]},
                                                    {"f1", report.per_class_f1[c]},
                                                    {"support", report.support[c]}};
    }
    nlohmann::json confusion = nlohmann::json::array();
    for (const auto& row : report.confusion) confusion.push_back(row);
    return {{"labels", kEmotionNames},       {"per_class", per_class}, {"weighted_f1", report.weighted_f1},
            {"accuracy", report.accuracy},   {"total", report.total},  {"confusion", confusion}};
}

std::string report_csv(const EvalReport& report) {
    std::string out = "class,precision,recall,f1,support\n";
    for (std::size_t c = 0; c < kEmotionCount; ++c) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", kEmotionNames[c], report.precision[c], report.recall[c],
                           report.per_class_f1[c], report.support[c]);
    }
    out += fmt::format("weighted,,,{:.6f},{}\n", report.weighted_f1, report.total);
    return out;
}

std::string confusion_csv(const EvalReport& report) {
    std::string out = "gold\\predicted";
    for (auto name : kEmotionNames) out += fmt::format(",{}", name);
    out += '\n';
    for (std::size_t g = 0; g < kEmotionCount; ++g) {
        out += kEmotionNames[g];
        for (std::size_t p = 0; p < kEmotionCount; ++p) out += fmt::format(",{}", report.confusion[g][p]);
        out += '\n';
    }
    return out;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ContractError(fmt::format("paired_t_test: {} scores against {}", a.size(), b.size()));
    }
    if (a.size() < 2) {
        throw ContractError("paired_t_test: need at least 2 paired scores");
    }
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = (a[i] - b[i]) - mean;
        ss += dev * dev;
    }
    TTestResult r;
    r.df = n - 1;
    const double sd = std::sqrt(ss / static_cast<double>(r.df));
    if (!(sd > 0.0)) {
        r.degenerate = true;
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const boost::math::students_t dist(static_cast<double>(r.df));
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    return r;
}

} // namespace coffee
