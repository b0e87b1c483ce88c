#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "coffee/data/corpus.hpp"

namespace coffee {

// Word-level vocabulary. Ids 0..4 are reserved for the special tokens.
class Vocab {
  public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;
    static constexpr std::size_t kSep = 2;
    static constexpr std::size_t kSpk = 3;
    static constexpr std::size_t kCls = 4;
    static constexpr std::size_t kSpecialCount = 5;

    Vocab();
    // Regular tokens in id order, starting at id 5. Duplicates or special
    // names raise ContractError.
    explicit Vocab(const std::vector<std::string>& tokens);

    [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
    // Normalised lookup; unknown tokens map to kUnk.
    [[nodiscard]] std::size_t id(std::string_view token) const;
    [[nodiscard]] bool contains(std::string_view token) const;
    [[nodiscard]] const std::string& token(std::size_t id) const;
    [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::array<std::string_view, Vocab::kSpecialCount> kSpecialTokens = {
    "[PAD]", "[UNK]", "[SEP]", "[SPK]", "[CLS]"};

// Lowercases ASCII letters; other scripts are kept as-is.
std::string normalize_token(std::string_view token);
std::vector<std::string> normalized_tokens(std::string_view text);

// Counts tokens of train-split utterances and speakers, plus any extra texts
// (the train commonsense texts), keeps those seen at least min_count times and
// orders them by descending frequency, then lexicographically.
// EmptyInputError when the train split is empty.
Vocab build_vocab(const Corpus& corpus, std::size_t min_count,
                  const std::vector<std::string>& extra_texts = {});

// Newline-delimited tokens in id order, the five special tokens first.
void save_vocab(const std::filesystem::path& path, const Vocab& vocab);
Vocab load_vocab(const std::filesystem::path& path);

} // namespace coffee
