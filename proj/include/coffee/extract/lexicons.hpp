#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace coffee {

// Word lists and lookup tables backing the extraction stages.
//
// Directory layout (all UTF-8):
//   english.txt, hindi_roman.txt, proper_nouns.txt,
//   stopwords_en.txt, stopwords_hi.txt   one entry per line
//   transliteration.tsv                  roman<TAB>devanagari
//   translation.tsv                      devanagari<TAB>english
// Blank lines and lines starting with '#' are ignored. Word-list entries are
// matched case-insensitively (ASCII).
struct Lexicons {
    std::unordered_set<std::string> english;
    std::unordered_set<std::string> hindi_roman;
    std::unordered_set<std::string> proper_nouns;
    std::unordered_set<std::string> stopwords_en;
    // Devanagari and romanised forms.
    std::unordered_set<std::string> stopwords_hi;
    std::unordered_map<std::string, std::string> transliteration;
    std::unordered_map<std::string, std::string> translation;

    static Lexicons load(const std::filesystem::path& dir);
};

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);
std::unordered_map<std::string, std::string> load_table(const std::filesystem::path& path);

} // namespace coffee
