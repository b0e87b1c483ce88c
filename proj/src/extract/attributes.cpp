#include "coffee/extract/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coffee/core/error.hpp"

namespace coffee {

void check_selection(const std::vector<std::string>& selection) {
    if (selection.empty()) {
        throw SelectionError("attribute selection is empty");
    }
    for (const auto& name : selection) {
        if (!is_effect_type(name)) {
            throw SelectionError("unknown commonsense attribute '" + name + "'");
        }
    }
}

std::vector<std::string> parse_attribute_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        auto item = text.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) out.emplace_back(item);
        start = end + 1;
    }
    check_selection(out);
    return out;
}

std::string select_attributes(const CommonsenseResult& result,
                              const std::vector<std::string>& selection) {
    check_selection(selection);
    std::string text;
    for (const auto& name : selection) {
        const auto& phrases = result.at(name);
        if (phrases.empty()) continue;
        if (!text.empty()) text += ' ';
        text += '<' + name + '>';
        for (std::size_t i = 0; i < phrases.size(); ++i) {
            text += i == 0 ? " " : " ; ";
            text += phrases[i];
        }
    }
    return text;
}

CorrelationEntry pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw ContractError("pearson: " + std::to_string(x.size()) + " values against " +
                            std::to_string(y.size()));
    }
    if (x.size() < 2) {
        throw SampleError("correlation needs at least 2 instances, got " + std::to_string(x.size()));
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    CorrelationEntry entry;
    entry.samples = x.size();
    const double denom = std::sqrt(sxx * syy);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        entry.degenerate = true;
        return entry;
    }
    entry.r = std::clamp(sxy / denom, -1.0, 1.0);
    return entry;
}

CorrelationEntry correlate_attributes(const std::vector<std::pair<Tensor, std::size_t>>& instances) {
    if (instances.size() < 2) {
        throw SampleError("correlation needs at least 2 instances, got " +
                          std::to_string(instances.size()));
    }
    std::vector<double> scalars, labels;
    for (const auto& [embedding, label] : instances) {
        const auto& v = embedding.data();
        if (v.empty()) {
            throw EmptyInputError("correlate_attributes: empty embedding");
        }
        scalars.push_back(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
        labels.push_back(static_cast<double>(label));
    }
    return pearson(scalars, labels);
}

} // namespace coffee
