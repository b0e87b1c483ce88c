#include "coffee/data/text.hpp"

#include <array>

#include "coffee/core/error.hpp"

namespace coffee {

namespace {

constexpr std::array<std::string_view, 5> kTagNames = {"english", "hindi_roman", "hindi_devanagari",
                                                       "proper_noun", "other"};

bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v' ||
           cp == 0x00A0 || cp == 0x200B || cp == 0x3000;
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
    }
    // Dandas and general punctuation block act as separators.
    if (cp == 0x0964 || cp == 0x0965) return false;
    if (cp >= 0x2000 && cp <= 0x206F) return false;
    return cp != 0xFFFD;
}

} // namespace

std::string_view tag_name(LanguageTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

LanguageTag tag_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kTagNames.size(); ++i) {
        if (kTagNames[i] == name) return static_cast<LanguageTag>(i);
    }
    throw ParseError("unknown language tag '" + std::string(name) + "'");
}

std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        }
        bool ok = len != 0 && i + len <= text.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto b = static_cast<unsigned char>(text[i + k]);
            ok = (b & 0xC0) == 0x80;
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(const std::u32string& codepoints) {
    std::string out;
    for (char32_t cp : codepoints) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

bool is_devanagari(char32_t cp) { return cp >= 0x0900 && cp <= 0x097F; }

bool contains_devanagari(std::string_view text) {
    for (char32_t cp : decode_utf8(text)) {
        if (is_devanagari(cp) && cp != 0x0964 && cp != 0x0965) return true;
    }
    return false;
}

bool is_ascii(std::string_view text) {
    for (char c : text) {
        if (static_cast<unsigned char>(c) >= 0x80) return false;
    }
    return true;
}

std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    const auto cps = decode_utf8(text);
    std::vector<std::string> tokens;
    std::u32string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(encode_utf8(current));
            current.clear();
        }
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i];
        if (is_word_char(cp)) {
            current.push_back(cp);
            continue;
        }
        const bool joiner = cp == U'\'' || cp == U'-' || cp == 0x2019;
        if (joiner && !current.empty() && i + 1 < cps.size() && is_word_char(cps[i + 1]) &&
            !is_space(cps[i + 1])) {
            current.push_back(cp == 0x2019 ? U'\'' : cp);
            continue;
        }
        flush();
    }
    flush();
    return tokens;
}

std::size_t whitespace_length(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char32_t cp : decode_utf8(text)) {
        if (is_space(cp)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

} // namespace coffee
