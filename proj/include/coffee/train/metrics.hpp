#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "coffee/data/labels.hpp"

namespace coffee {

using ClassArray = std::array<double, kEmotionCount>;
using CountArray = std::array<std::size_t, kEmotionCount>;

struct EvalReport {
    ClassArray precision{};
    ClassArray recall{};
    // F1 = 0 when precision + recall = 0.
    ClassArray per_class_f1{};
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    // Rows are gold labels, columns predictions.
    std::array<CountArray, kEmotionCount> confusion{};
    CountArray support{};
    std::size_t total = 0;
};

// EmptyInputError on no predictions; ContractError on length mismatch;
// LabelError on indices outside [0, 8).
EvalReport compute_report(std::span<const std::size_t> gold, std::span<const std::size_t> predicted);

nlohmann::json to_json(const EvalReport& report);
// class,precision,recall,f1,support rows for the eight classes, then a
// "weighted" row.
std::string report_csv(const EvalReport& report);
// Square table, gold in rows, predictions in columns.
std::string confusion_csv(const EvalReport& report);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t df = 0;
    // Differences have zero variance: t = 0, p = 1 when their mean is zero,
    // otherwise t = +-infinity and p = 0.
    bool degenerate = false;
};

// Paired two-sided t-test on a - b. ContractError unless both lists have the
// same length >= 2.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

} // namespace coffee
