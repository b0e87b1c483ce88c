#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coffee/data/labels.hpp"
#include "coffee/data/text.hpp"

namespace coffee {

enum class Split { train, val, test };

std::string_view split_name(Split split);
Split split_from_name(std::string_view name);

struct Utterance {
    std::string speaker;
    std::string text;
    std::optional<Emotion> label;
    // Filled by language identification; never serialised.
    std::optional<std::vector<LanguageTaggedToken>> tokens;
};

struct Dialogue {
    std::string id;
    std::vector<Utterance> utterances;
    Split split = Split::train;
    // 1-based source line, 0 when built in memory.
    std::size_t line = 0;
};

using Corpus = std::vector<Dialogue>;

// JSONL corpus, one dialogue per line:
//   {"id": str, "split": "train"|"val"|"test",
//    "utterances": [{"speaker": str, "text": str, "emotion": str|null}]}
// Blank lines are skipped. Errors carry the offending line number.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, std::string_view source = "<stream>");

nlohmann::json dialogue_to_json(const Dialogue& dialogue);
Dialogue dialogue_from_json(const nlohmann::json& record, std::size_t line = 0);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

Corpus filter_split(const Corpus& corpus, Split split);

// One classification target: an utterance with up to `window` preceding
// utterances of the same dialogue as context.
struct Instance {
    std::string id; // "<dialogue id>#<utterance index>"
    std::string dialogue_id;
    std::size_t position = 0;
    Split split = Split::train;
    std::vector<Utterance> context;
    Utterance target;
    std::size_t label = 0;
};

inline constexpr std::size_t kDefaultContextWindow = 5;

// One instance per labeled utterance. A split that carries any label must be
// fully labeled; an unlabeled utterance there raises IntegrityError.
std::vector<Instance> make_instances(const Corpus& corpus,
                                     std::size_t context_window = kDefaultContextWindow);

struct SplitStats {
    std::size_t dialogues = 0;
    std::size_t utterances = 0;
    double avg_speakers = 0.0;
    double avg_utterance_length = 0.0;
    std::size_t max_utterance_length = 0;
};

struct CorpusStats {
    std::map<Split, SplitStats> per_split;
    SplitStats total;
    // Distinct lowercased surfaces per language tag; empty without a tagger.
    std::map<LanguageTag, std::size_t> vocabulary;
};

using Tagger = std::function<std::vector<LanguageTaggedToken>(std::string_view)>;

// Utterance length is counted in whitespace tokens.
CorpusStats corpus_stats(const Corpus& corpus, const Tagger& tagger = {});

// Table with one row per split plus a total row, averages to 2 decimals.
std::string format_stats(const CorpusStats& stats);

} // namespace coffee
