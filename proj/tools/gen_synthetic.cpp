#include <filesystem>
#include <iostream>

#include "coffee/core/error.hpp"
#include "coffee/train/synthetic.hpp"

// Writes the bundled synthetic corpora and their commonsense caches.
int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_synthetic <output dir>\n";
        return 2;
    }
    try {
        const std::filesystem::path dir = argv[1];
        std::filesystem::create_directories(dir);
        const auto separable = coffee::make_separable_corpus(1, 50);
        coffee::save_corpus(dir / "separable.jsonl", separable.corpus);
        coffee::save_cache(dir / "separable_cs.json", separable.cache);
        const auto planted = coffee::make_planted_commonsense_corpus(2, 100);
        coffee::save_corpus(dir / "planted.jsonl", planted.corpus);
        coffee::save_cache(dir / "planted_cs.json", planted.cache);
    } catch (const coffee::Error& e) {
        std::cerr << "gen_synthetic: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
