#include "coffee/data/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "coffee/core/error.hpp"

namespace coffee {

namespace {

std::string at_line(std::string_view source, std::size_t line) {
    return std::string(source) + ":" + std::to_string(line) + ": ";
}

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(std::string("missing field '") + key + "'");
    }
    return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key) {
    const auto& v = require_field(obj, key);
    if (!v.is_string()) {
        throw ParseError(std::string("field '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

} // namespace

std::string_view split_name(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "train";
}

Split split_from_name(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ParseError("unknown split '" + std::string(name) + "'");
}

Dialogue dialogue_from_json(const nlohmann::json& record, std::size_t line) {
    if (!record.is_object()) {
        throw ParseError("dialogue record must be a JSON object");
    }
    Dialogue d;
    d.line = line;
    d.id = require_string(record, "id");
    if (d.id.empty()) {
        throw ParseError("dialogue id is empty");
    }
    d.split = split_from_name(require_string(record, "split"));
    const auto& utts = require_field(record, "utterances");
    if (!utts.is_array() || utts.empty()) {
        throw ParseError("dialogue '" + d.id + "' needs a nonempty 'utterances' array");
    }
    for (const auto& u : utts) {
        if (!u.is_object()) {
            throw ParseError("utterance must be a JSON object");
        }
        Utterance utt;
        utt.speaker = require_string(u, "speaker");
        utt.text = require_string(u, "text");
        if (utt.speaker.empty()) throw ParseError("utterance speaker is empty");
        if (utt.text.empty()) throw ParseError("utterance text is empty");
        auto it = u.find("emotion");
        if (it != u.end() && !it->is_null()) {
            if (!it->is_string()) throw ParseError("'emotion' must be a string or null");
            utt.label = emotion_from_index(encode_label(it->get<std::string>()));
        }
        d.utterances.push_back(std::move(utt));
    }
    return d;
}

nlohmann::json dialogue_to_json(const Dialogue& dialogue) {
    nlohmann::json utts = nlohmann::json::array();
    for (const auto& u : dialogue.utterances) {
        nlohmann::json entry;
        entry["speaker"] = u.speaker;
        entry["text"] = u.text;
        entry["emotion"] = u.label ? nlohmann::json(decode_label(index_of(*u.label))) : nlohmann::json();
        utts.push_back(std::move(entry));
    }
    nlohmann::json record;
    record["id"] = dialogue.id;
    record["split"] = split_name(dialogue.split);
    record["utterances"] = std::move(utts);
    return record;
}

Corpus parse_corpus(std::istream& in, std::string_view source) {
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(at_line(source, line) + "malformed JSON: " + e.what());
        }
        Dialogue d;
        try {
            d = dialogue_from_json(record, line);
        } catch (const LabelError& e) {
            throw LabelError(at_line(source, line) + e.what());
        } catch (const ParseError& e) {
            throw ParseError(at_line(source, line) + e.what());
        }
        auto [it, inserted] = seen.emplace(d.id, line);
        if (!inserted) {
            throw IntegrityError(at_line(source, line) + "duplicate dialogue id '" + d.id +
                                 "' (first seen on line " + std::to_string(it->second) + ")");
        }
        corpus.push_back(std::move(d));
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus " + path.string());
    }
    return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& d : corpus) out << dialogue_to_json(d).dump() << '\n';
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write corpus " + path.string());
    }
    write_corpus(out, corpus);
}

Corpus filter_split(const Corpus& corpus, Split split) {
    Corpus out;
    for (const auto& d : corpus) {
        if (d.split == split) out.push_back(d);
    }
    return out;
}

std::vector<Instance> make_instances(const Corpus& corpus, std::size_t context_window) {
    if (context_window == 0) {
        throw ContractError("context window must be positive");
    }
    std::set<Split> labeled_splits;
    for (const auto& d : corpus) {
        for (const auto& u : d.utterances) {
            if (u.label) labeled_splits.insert(d.split);
        }
    }
    std::vector<Instance> out;
    for (const auto& d : corpus) {
        const bool labeled_split = labeled_splits.contains(d.split);
        for (std::size_t i = 0; i < d.utterances.size(); ++i) {
            const auto& u = d.utterances[i];
            if (!u.label) {
                if (labeled_split) {
                    throw IntegrityError("dialogue '" + d.id + "' utterance " + std::to_string(i) +
                                         " is unlabeled in labeled split '" +
                                         std::string(split_name(d.split)) + "'");
                }
                continue;
            }
            Instance inst;
            inst.id = d.id + "#" + std::to_string(i);
            inst.dialogue_id = d.id;
            inst.position = i;
            inst.split = d.split;
            const std::size_t first = i > context_window ? i - context_window : 0;
            inst.context.assign(d.utterances.begin() + static_cast<std::ptrdiff_t>(first),
                                d.utterances.begin() + static_cast<std::ptrdiff_t>(i));
            inst.target = u;
            inst.label = index_of(*u.label);
            out.push_back(std::move(inst));
        }
    }
    return out;
}

namespace {

struct Accumulator {
    std::size_t dialogues = 0;
    std::size_t utterances = 0;
    std::size_t speakers = 0;
    std::size_t length_total = 0;
    std::size_t max_length = 0;

    void add(const Dialogue& d) {
        ++dialogues;
        std::set<std::string> who;
        for (const auto& u : d.utterances) {
            ++utterances;
            who.insert(u.speaker);
            const std::size_t len = whitespace_length(u.text);
            length_total += len;
            max_length = std::max(max_length, len);
        }
        speakers += who.size();
    }

    [[nodiscard]] SplitStats finish() const {
        SplitStats s;
        s.dialogues = dialogues;
        s.utterances = utterances;
        s.avg_speakers = dialogues ? static_cast<double>(speakers) / static_cast<double>(dialogues) : 0.0;
        s.avg_utterance_length =
            utterances ? static_cast<double>(length_total) / static_cast<double>(utterances) : 0.0;
        s.max_utterance_length = max_length;
        return s;
    }
};

} // namespace

CorpusStats corpus_stats(const Corpus& corpus, const Tagger& tagger) {
    if (corpus.empty()) {
        throw EmptyInputError("corpus_stats: corpus is empty");
    }
    std::map<Split, Accumulator> per_split{{Split::train, {}}, {Split::val, {}}, {Split::test, {}}};
    Accumulator total;
    std::map<LanguageTag, std::set<std::string>> vocab;
    for (const auto& d : corpus) {
        per_split[d.split].add(d);
        total.add(d);
        if (tagger) {
            for (const auto& u : d.utterances) {
                for (const auto& tok : tagger(u.text)) vocab[tok.tag].insert(ascii_lower(tok.surface));
            }
        }
    }
    CorpusStats stats;
    for (const auto& [split, acc] : per_split) stats.per_split[split] = acc.finish();
    stats.total = total.finish();
    for (const auto& [tag, words] : vocab) stats.vocabulary[tag] = words.size();
    return stats;
}

std::string format_stats(const CorpusStats& stats) {
    std::string out = fmt::format("{:<6} {:>8} {:>8} {:>11} {:>8} {:>8}\n", "set", "dialogues",
                                  "utterances", "avg_sp/dlg", "avg_len", "max_len");
    auto row = [&](std::string_view name, const SplitStats& s) {
        out += fmt::format("{:<6} {:>8} {:>8} {:>11.2f} {:>8.2f} {:>8}\n", name, s.dialogues,
                           s.utterances, s.avg_speakers, s.avg_utterance_length,
                           s.max_utterance_length);
    };
    for (const auto& [split, s] : stats.per_split) row(split_name(split), s);
    row("total", stats.total);
    if (!stats.vocabulary.empty()) {
        out += "vocabulary:";
        for (const auto& [tag, n] : stats.vocabulary) out += fmt::format(" {}={}", tag_name(tag), n);
        out += '\n';
    }
    return out;
}

} // namespace coffee
