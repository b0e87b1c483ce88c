#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "coffee/data/text.hpp"
#include "coffee/extract/lexicons.hpp"

namespace coffee {

// Stage 1. Tokenises and tags each token by lexicon lookup with precedence
// proper_noun > hindi_roman > english > other; tokens containing Devanagari
// are hindi_devanagari regardless of lexicons. Empty text gives no tokens.
std::vector<LanguageTaggedToken> identify_language(std::string_view text, const Lexicons& lex);

// Stage 2. Romanised Hindi to Devanagari by table lookup. A miss leaves the
// token unchanged with passthrough set. ContractError unless tag is hindi_roman.
LanguageTaggedToken transliterate(const LanguageTaggedToken& token, const Lexicons& lex);

// Applies transliterate() to every hindi_roman token, leaves others alone.
std::vector<LanguageTaggedToken> transliterate_all(const std::vector<LanguageTaggedToken>& tokens,
                                                   const Lexicons& lex);

// Stage 3. Non-Devanagari tokens are lowercased and reduced to [a-z0-9'];
// Devanagari tokens are kept verbatim. Stopwords are removed per language and
// empty tokens dropped.
std::vector<LanguageTaggedToken> preprocess(const std::vector<LanguageTaggedToken>& tokens,
                                            const Lexicons& lex);

struct TopicSet {
    std::vector<std::string> topics;
    // Devanagari topics the dictionary missed; their romanised origin was used.
    std::vector<std::string> untranslated;

    [[nodiscard]] std::string query() const;
    friend bool operator==(const TopicSet&, const TopicSet&) = default;
};

// Stage 4. Devanagari topics to English through the dictionary, falling back
// to the romanised origin. Output is lowercase ASCII, stopword-free and
// de-duplicated in first-occurrence order.
TopicSet translate_topics(const std::vector<LanguageTaggedToken>& tokens, const Lexicons& lex);

// Stages 1-4 with every intermediate kept, for inspection and golden tests.
struct ExtractionTrace {
    std::vector<LanguageTaggedToken> tagged;
    std::vector<LanguageTaggedToken> transliterated;
    std::vector<LanguageTaggedToken> preprocessed;
    TopicSet topics;
};

ExtractionTrace extract_topics(std::string_view text, const Lexicons& lex);

} // namespace coffee
