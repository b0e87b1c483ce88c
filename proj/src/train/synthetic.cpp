#include "coffee/train/synthetic.hpp"

#include <array>
#include <string>
#include <vector>

#include "coffee/core/error.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/data/labels.hpp"

namespace coffee {

namespace {

constexpr std::size_t kUtterancesPerDialogue = 3;

const std::vector<std::string> kFiller = {"yaar",  "accha", "matlab", "so",    "then",  "kal",   "office",
                                          "ghar",  "chalo", "phone",  "time",  "abhi",  "dekho", "really",
                                          "haan",  "bas",   "kya",    "today", "mummyji", "paper", "beta",
                                          "aaj",   "logo",  "baat",   "box",   "tea",   "market", "bus"};

const std::vector<std::string> kSpeakers = {"Maya", "Sahil", "Monisha", "Rosesh", "Indravadan"};

// Two text cues per label, index order of the label set.
const std::array<std::array<const char*, 2>, kEmotionCount> kTextCues = {{{"gussa", "furious"},
                                                                          {"ghatiya", "pathetic"},
                                                                          {"chhee", "gross"},
                                                                          {"darr", "scared"},
                                                                          {"khushi", "awesome"},
                                                                          {"normal", "shayad"},
                                                                          {"dukh", "crying"},
                                                                          {"arre", "wow"}}};

const std::array<const char*, kEmotionCount> kWantCues = {"fight", "mock", "leave", "hide",
                                                          "celebrate", "continue", "weep", "investigate"};
const std::array<const char*, kEmotionCount> kReactCues = {"angry", "scornful", "repulsed", "afraid",
                                                           "happy", "calm", "sad", "amazed"};

std::string filler_text(Rng& rng, std::size_t words, const char* cue) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < words; ++i) tokens.push_back(kFiller[rng.below(kFiller.size())]);
    if (cue) tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(tokens.size() + 1)), cue);
    std::string text;
    for (const auto& t : tokens) text += (text.empty() ? "" : " ") + t;
    return text;
}

Split split_for(std::size_t index, std::size_t dialogues) {
    const std::size_t tenth = std::max<std::size_t>(1, dialogues / 10);
    if (index >= dialogues - tenth) return Split::test;
    if (index >= dialogues - 2 * tenth) return Split::val;
    return Split::train;
}

CommonsenseResult generic_result() {
    CommonsenseResult r;
    for (auto e : kEffectTypes) r.effects[std::string(e)] = {"to talk"};
    r.effects["oReact"] = {"attentive"};
    return r;
}

// Balanced labels: each consecutive block of eight utterances is a shuffled
// copy of the label set.
std::vector<std::size_t> balanced_labels(Rng& rng, std::size_t count) {
    std::vector<std::size_t> labels;
    while (labels.size() < count) {
        std::vector<std::size_t> block(kEmotionCount);
        for (std::size_t i = 0; i < kEmotionCount; ++i) block[i] = i;
        rng.shuffle(block);
        labels.insert(labels.end(), block.begin(), block.end());
    }
    labels.resize(count);
    return labels;
}

SyntheticData generate(std::uint64_t seed, std::size_t dialogues, bool planted) {
    if (dialogues < 3) throw ContractError("synthetic corpus needs at least 3 dialogues");
    Rng rng(seed);
    const auto labels = balanced_labels(rng, dialogues * kUtterancesPerDialogue);
    SyntheticData data;
    std::size_t k = 0;
    for (std::size_t d = 0; d < dialogues; ++d) {
        Dialogue dialogue;
        dialogue.id = (planted ? "pl-" : "sep-") + std::to_string(d);
        dialogue.split = split_for(d, dialogues);
        const std::size_t first_speaker = rng.below(kSpeakers.size());
        for (std::size_t i = 0; i < kUtterancesPerDialogue; ++i, ++k) {
            const std::size_t label = labels[k];
            Utterance u;
            u.speaker = kSpeakers[(first_speaker + i) % kSpeakers.size()];
            const char* cue = planted ? nullptr : kTextCues[label][rng.below(2)];
            u.text = filler_text(rng, 4 + rng.below(4), cue);
            u.label = emotion_from_index(label);
            dialogue.utterances.push_back(std::move(u));

            CacheEntry entry;
            entry.result = generic_result();
            if (planted) {
                entry.result.effects["xWant"] = {std::string("to ") + kWantCues[label]};
                entry.result.effects["oReact"] = {kReactCues[label]};
            }
            entry.query = "synthetic";
            entry.topics = {"synthetic"};
            data.cache.instances.emplace(dialogue.id + "#" + std::to_string(i), std::move(entry));
        }
        data.corpus.push_back(std::move(dialogue));
    }
    return data;
}

} // namespace

SyntheticData make_separable_corpus(std::uint64_t seed, std::size_t dialogues) {
    return generate(seed, dialogues, false);
}

SyntheticData make_planted_commonsense_corpus(std::uint64_t seed, std::size_t dialogues) {
    return generate(seed, dialogues, true);
}

} // namespace coffee
