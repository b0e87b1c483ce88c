#include "coffee/extract/lexicons.hpp"

#include <fstream>

#include "coffee/core/error.hpp"
#include "coffee/data/text.hpp"

namespace coffee {

namespace {

std::ifstream open_asset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open lexicon asset " + path.string());
    }
    return in;
}

bool skip_line(const std::string& line) { return line.empty() || line.front() == '#'; }

void trim_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

} // namespace

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
    auto in = open_asset(path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        trim_cr(line);
        if (skip_line(line)) continue;
        words.insert(ascii_lower(line));
    }
    return words;
}

std::unordered_map<std::string, std::string> load_table(const std::filesystem::path& path) {
    auto in = open_asset(path);
    std::unordered_map<std::string, std::string> table;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        trim_cr(line);
        if (skip_line(line)) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw ParseError(path.string() + ":" + std::to_string(number) +
                             ": expected two tab-separated columns");
        }
        table.emplace(ascii_lower(line.substr(0, tab)), line.substr(tab + 1));
    }
    return table;
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
    Lexicons lex;
    lex.english = load_word_list(dir / "english.txt");
    lex.hindi_roman = load_word_list(dir / "hindi_roman.txt");
    lex.proper_nouns = load_word_list(dir / "proper_nouns.txt");
    lex.stopwords_en = load_word_list(dir / "stopwords_en.txt");
    lex.stopwords_hi = load_word_list(dir / "stopwords_hi.txt");
    lex.transliteration = load_table(dir / "transliteration.tsv");
    lex.translation = load_table(dir / "translation.tsv");
    return lex;
}

} // namespace coffee
