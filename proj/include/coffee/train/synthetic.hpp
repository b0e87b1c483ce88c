#pragma once

#include <cstddef>
#include <cstdint>

#include "coffee/data/corpus.hpp"
#include "coffee/extract/cache.hpp"

namespace coffee {

struct SyntheticData {
    Corpus corpus;
    CommonsenseCache cache;
};

// Three-utterance dialogues of code-mixed filler words. Every utterance holds
// one cue word planted for its label, so labels are a function of the text.
// The commonsense cache is identical for every instance and carries no signal.
// Splits: the last tenth of the dialogues is test, the tenth before it val.
SyntheticData make_separable_corpus(std::uint64_t seed, std::size_t dialogues = 50);

// Same shape, but the text is pure filler: labels are recoverable only from
// cue phrases planted in the xWant and oReact lists of the cache.
SyntheticData make_planted_commonsense_corpus(std::uint64_t seed, std::size_t dialogues = 100);

} // namespace coffee
