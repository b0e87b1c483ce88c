#include "coffee/extract/pipeline.hpp"

#include <unordered_set>

#include "coffee/core/error.hpp"

namespace coffee {

namespace {

std::string normalise_ascii(std::string_view surface) {
    std::string out;
    for (char c : ascii_lower(surface)) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
        if (keep) out += c;
    }
    const auto first = out.find_first_not_of('\'');
    if (first == std::string::npos) return {};
    const auto last = out.find_last_not_of('\'');
    return out.substr(first, last - first + 1);
}

} // namespace

std::vector<LanguageTaggedToken> identify_language(std::string_view text, const Lexicons& lex) {
    std::vector<LanguageTaggedToken> out;
    for (auto& surface : tokenize(text)) {
        LanguageTaggedToken tok;
        tok.surface = std::move(surface);
        if (contains_devanagari(tok.surface)) {
            tok.tag = LanguageTag::hindi_devanagari;
        } else {
            const auto key = ascii_lower(tok.surface);
            if (lex.proper_nouns.contains(key)) {
                tok.tag = LanguageTag::proper_noun;
            } else if (lex.hindi_roman.contains(key)) {
                tok.tag = LanguageTag::hindi_roman;
            } else if (lex.english.contains(key)) {
                tok.tag = LanguageTag::english;
            } else {
                tok.tag = LanguageTag::other;
            }
        }
        out.push_back(std::move(tok));
    }
    return out;
}

LanguageTaggedToken transliterate(const LanguageTaggedToken& token, const Lexicons& lex) {
    if (token.tag != LanguageTag::hindi_roman) {
        throw ContractError("transliterate: token '" + token.surface + "' is tagged " +
                            std::string(tag_name(token.tag)) + ", expected hindi_roman");
    }
    LanguageTaggedToken out = token;
    const auto key = ascii_lower(token.surface);
    auto it = lex.transliteration.find(key);
    if (it == lex.transliteration.end()) {
        out.passthrough = true;
        out.origin = key;
        return out;
    }
    out.surface = it->second;
    out.tag = LanguageTag::hindi_devanagari;
    out.origin = key;
    out.passthrough = false;
    return out;
}

std::vector<LanguageTaggedToken> transliterate_all(const std::vector<LanguageTaggedToken>& tokens,
                                                   const Lexicons& lex) {
    std::vector<LanguageTaggedToken> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        out.push_back(tok.tag == LanguageTag::hindi_roman ? transliterate(tok, lex) : tok);
    }
    return out;
}

std::vector<LanguageTaggedToken> preprocess(const std::vector<LanguageTaggedToken>& tokens,
                                            const Lexicons& lex) {
    std::vector<LanguageTaggedToken> out;
    for (const auto& tok : tokens) {
        if (tok.tag == LanguageTag::hindi_devanagari) {
            if (!lex.stopwords_hi.contains(tok.surface)) out.push_back(tok);
            continue;
        }
        LanguageTaggedToken cleaned = tok;
        cleaned.surface = normalise_ascii(tok.surface);
        if (cleaned.surface.empty()) continue;
        const auto& stop = tok.tag == LanguageTag::hindi_roman ? lex.stopwords_hi : lex.stopwords_en;
        if (stop.contains(cleaned.surface)) continue;
        out.push_back(std::move(cleaned));
    }
    return out;
}

std::string TopicSet::query() const {
    std::string q;
    for (const auto& t : topics) {
        if (!q.empty()) q += ' ';
        q += t;
    }
    return q;
}

TopicSet translate_topics(const std::vector<LanguageTaggedToken>& tokens, const Lexicons& lex) {
    TopicSet set;
    std::unordered_set<std::string> seen;
    auto emit = [&](std::string_view candidate) {
        // Dictionary entries may hold several words; each is a topic.
        for (const auto& word : tokenize(candidate)) {
            auto topic = normalise_ascii(word);
            if (topic.empty() || !is_ascii(topic) || lex.stopwords_en.contains(topic)) continue;
            if (seen.insert(topic).second) set.topics.push_back(std::move(topic));
        }
    };
    for (const auto& tok : tokens) {
        if (tok.tag != LanguageTag::hindi_devanagari) {
            emit(tok.surface);
            continue;
        }
        auto it = lex.translation.find(tok.surface);
        if (it != lex.translation.end()) {
            emit(it->second);
        } else {
            set.untranslated.push_back(tok.surface);
            if (!tok.origin.empty()) emit(tok.origin);
        }
    }
    return set;
}

ExtractionTrace extract_topics(std::string_view text, const Lexicons& lex) {
    ExtractionTrace trace;
    trace.tagged = identify_language(text, lex);
    trace.transliterated = transliterate_all(trace.tagged, lex);
    trace.preprocessed = preprocess(trace.transliterated, lex);
    trace.topics = translate_topics(trace.preprocessed, lex);
    return trace;
}

} // namespace coffee
