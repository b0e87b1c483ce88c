#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coffee/core/tensor.hpp"
#include "coffee/extract/comet.hpp"

namespace coffee {

inline const std::vector<std::string> kDefaultAttributes = {"xWant", "oReact"};

// Validates a selection; SelectionError on an unknown name or an empty list.
void check_selection(const std::vector<std::string>& selection);

// "xWant,oReact" -> {"xWant", "oReact"}, validated.
std::vector<std::string> parse_attribute_list(std::string_view text);

// Phrases of the selected effect-types in selection order. Each nonempty
// attribute contributes "<name> p1 ; p2 ..."; attributes without phrases
// contribute nothing, so the text is empty iff every selected list is empty.
std::string select_attributes(const CommonsenseResult& result,
                              const std::vector<std::string>& selection = kDefaultAttributes);

struct CorrelationEntry {
    double r = 0.0;
    bool degenerate = false;
    std::size_t samples = 0;
};

// Pearson correlation; zero variance on either side gives r = 0, degenerate.
// SampleError with fewer than two points.
CorrelationEntry pearson(const std::vector<double>& x, const std::vector<double>& y);

// Each embedding is reduced to the mean of its entries and correlated with the
// integer label code.
CorrelationEntry correlate_attributes(const std::vector<std::pair<Tensor, std::size_t>>& instances);

} // namespace coffee
