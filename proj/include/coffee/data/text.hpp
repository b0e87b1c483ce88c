#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace coffee {

enum class LanguageTag { english, hindi_roman, hindi_devanagari, proper_noun, other };

std::string_view tag_name(LanguageTag tag);
LanguageTag tag_from_name(std::string_view name);

struct LanguageTaggedToken {
    std::string surface;
    LanguageTag tag = LanguageTag::other;
    // Romanised spelling the token had before transliteration, if any.
    std::string origin;
    // Set when a table lookup missed and the surface passed through unchanged.
    bool passthrough = false;

    friend bool operator==(const LanguageTaggedToken&, const LanguageTaggedToken&) = default;
};

// UTF-8 helpers. Invalid byte sequences decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(const std::u32string& codepoints);
bool is_devanagari(char32_t cp);
bool contains_devanagari(std::string_view text);
bool is_ascii(std::string_view text);
std::string ascii_lower(std::string_view text);

// Splits on whitespace and punctuation. Apostrophes and hyphens survive only
// between two letters ("it's", "tissue-paper"); Devanagari dandas separate.
std::vector<std::string> tokenize(std::string_view text);

// Number of whitespace-separated tokens.
std::size_t whitespace_length(std::string_view text);

} // namespace coffee
