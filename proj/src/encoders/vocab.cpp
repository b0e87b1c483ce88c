#include "coffee/encoders/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "coffee/core/error.hpp"
#include "coffee/data/text.hpp"

namespace coffee {

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& tokens) {
    for (auto special : kSpecialTokens) tokens_.emplace_back(special);
    tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) {
            throw ContractError("vocabulary token " + std::to_string(i) + " is empty");
        }
        if (!index_.emplace(tokens_[i], i).second) {
            throw ContractError("vocabulary token '" + tokens_[i] + "' appears twice");
        }
    }
}

std::size_t Vocab::id(std::string_view token) const {
    auto it = index_.find(normalize_token(token));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.contains(normalize_token(token)); }

const std::string& Vocab::token(std::size_t id) const {
    if (id >= tokens_.size()) {
        throw ContractError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
    }
    return tokens_[id];
}

std::string normalize_token(std::string_view token) {
    // Special tokens keep their spelling so they round-trip through id().
    for (auto special : kSpecialTokens) {
        if (token == special) return std::string(token);
    }
    return ascii_lower(token);
}

std::vector<std::string> normalized_tokens(std::string_view text) {
    auto tokens = tokenize(text);
    for (auto& t : tokens) t = ascii_lower(t);
    return tokens;
}

Vocab build_vocab(const Corpus& corpus, std::size_t min_count,
                  const std::vector<std::string>& extra_texts) {
    std::map<std::string, std::size_t> counts;
    bool any_train = false;
    auto count = [&](std::string_view text) {
        for (auto& t : normalized_tokens(text)) ++counts[t];
    };
    for (const auto& d : corpus) {
        if (d.split != Split::train) continue;
        any_train = true;
        for (const auto& u : d.utterances) {
            count(u.speaker);
            count(u.text);
        }
    }
    if (!any_train) {
        throw EmptyInputError("build_vocab: corpus has no train split");
    }
    for (const auto& text : extra_texts) count(text);

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [token, n] : counts) {
        const bool special = std::find(kSpecialTokens.begin(), kSpecialTokens.end(), token) != kSpecialTokens.end();
        if (n >= std::max<std::size_t>(min_count, 1) && !special) kept.emplace_back(token, n);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [token, n] : kept) tokens.push_back(std::move(token));
    return Vocab(tokens);
}

void save_vocab(const std::filesystem::path& path, const Vocab& vocab) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write vocabulary " + path.string());
    }
    for (const auto& t : vocab.tokens()) out << t << '\n';
}

Vocab load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open vocabulary " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < Vocab::kSpecialCount) {
        throw ParseError("vocabulary " + path.string() + " lacks the special tokens");
    }
    for (std::size_t i = 0; i < Vocab::kSpecialCount; ++i) {
        if (lines[i] != kSpecialTokens[i]) {
            throw ParseError("vocabulary " + path.string() + " line " + std::to_string(i + 1) +
                             ": expected " + std::string(kSpecialTokens[i]));
        }
    }
    return Vocab(std::vector<std::string>(lines.begin() + Vocab::kSpecialCount, lines.end()));
}

} // namespace coffee
