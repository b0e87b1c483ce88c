#include <filesystem>
#include <fstream>
#include <iostream>

#include "coffee/core/error.hpp"
#include "coffee/extract/cache.hpp"

// Writes the per-instance extraction traces for the bundled fixture corpora.
// Usage: gen_golden <assets dir>
int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_golden <assets dir>\n";
        return 2;
    }
    try {
        const std::filesystem::path assets = argv[1];
        const auto lex = coffee::Lexicons::load(assets / "lexicons");
        coffee::CometClient client(coffee::make_comet_backend((assets / "fixtures" / "comet_fixture.json").string()));
        std::filesystem::create_directories(assets / "fixtures" / "golden");
        for (const char* name : {"corpus_fixture", "family_dialogue"}) {
            const auto corpus = coffee::load_corpus(assets / "fixtures" / (std::string(name) + ".jsonl"));
            std::ofstream out(assets / "fixtures" / "golden" / (std::string(name) + ".trace.jsonl"), std::ios::binary);
            for (const auto& inst : coffee::make_instances(corpus)) {
                out << coffee::instance_trace(inst, lex, client).dump() << '\n';
            }
        }
    } catch (const coffee::Error& e) {
        std::cerr << "gen_golden: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
