#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "coffee/core/error.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/data/corpus.hpp"
#include "coffee/data/labels.hpp"
#include "coffee/data/text.hpp"

using namespace coffee;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(COFFEE_ASSETS_DIR) / "fixtures";

Corpus parse(const std::string& text) {
    std::istringstream in(text);
    return parse_corpus(in, "mem");
}

std::string expect_error_message(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("label codec") {
    CHECK(encode_label("anger") == 0);
    CHECK(decode_label(7) == "surprise");
    CHECK_THROWS_AS((void)decode_label(8), LabelError);
    CHECK_THROWS_AS((void)encode_label("happy"), LabelError);
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        CHECK(encode_label(decode_label(i)) == i);
    }
}

TEST_CASE("tokenize keeps inner apostrophes and splits punctuation") {
    CHECK(tokenize("Khatam ho gaya Sahil it's over!") ==
          std::vector<std::string>{"Khatam", "ho", "gaya", "Sahil", "it's", "over"});
    CHECK(tokenize("tissue-paper, 'quoted'") ==
          std::vector<std::string>{"tissue-paper", "quoted"});
    CHECK(tokenize("क्या हुआ। ठीक") == std::vector<std::string>{"क्या", "हुआ", "ठीक"});
    CHECK(tokenize("").empty());
    CHECK(whitespace_length("  a b\tc \n") == 3);
}

TEST_CASE("load fixture corpus") {
    const auto corpus = load_corpus(kFixtures / "corpus_fixture.jsonl");
    REQUIRE(corpus.size() == 2);
    std::size_t utterances = 0;
    for (const auto& d : corpus) utterances += d.utterances.size();
    CHECK(utterances == 5);
    CHECK(corpus[0].line == 1);
    CHECK(corpus[1].split == Split::test);
    CHECK(corpus[0].utterances[0].label == Emotion::sadness);
}

TEST_CASE("corpus errors carry the line number") {
    const std::string good = R"({"id":"a","split":"train","utterances":[{"speaker":"x","text":"hi","emotion":"joy"}]})";
    const std::string happy = R"({"id":"b","split":"train","utterances":[{"speaker":"x","text":"hi","emotion":"happy"}]})";
    CHECK_THROWS_AS(parse(good + "\n" + happy + "\n"), LabelError);
    CHECK(expect_error_message(good + "\n" + happy + "\n").find("mem:2") != std::string::npos);
    CHECK_THROWS_AS(parse(good + "\n{not json\n"), ParseError);
    CHECK(expect_error_message(good + "\n{not json\n").find("mem:2") != std::string::npos);
    CHECK_THROWS_AS(parse(good + "\n" + good + "\n"), IntegrityError);
    CHECK_THROWS_AS(parse(R"({"id":"c","split":"dev","utterances":[{"speaker":"x","text":"hi","emotion":null}]})"),
                    ParseError);
    CHECK_THROWS_AS(parse(R"({"id":"c","split":"val","utterances":[]})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"id":"c","split":"val","utterances":[{"speaker":"","text":"hi","emotion":null}]})"),
                    ParseError);
}

TEST_CASE("round trip preserves every field") {
    Rng rng(11);
    const std::vector<std::string> words = {"ghar", "chalo", "it's", "over", "क्या", "zindagi", "\"q\"", "a\\b"};
    Corpus corpus;
    for (int d = 0; d < 20; ++d) {
        Dialogue dialogue;
        dialogue.id = "d" + std::to_string(d);
        dialogue.split = static_cast<Split>(rng.below(3));
        const auto n = 1 + rng.below(6);
        for (std::size_t i = 0; i < n; ++i) {
            Utterance u;
            u.speaker = "s" + std::to_string(rng.below(3));
            for (std::size_t w = 0, k = 1 + rng.below(8); w < k; ++w) {
                if (w) u.text += ' ';
                u.text += words[rng.below(words.size())];
            }
            if (rng.below(4) != 0) u.label = emotion_from_index(rng.below(kEmotionCount));
            dialogue.utterances.push_back(u);
        }
        corpus.push_back(dialogue);
    }
    std::ostringstream out;
    write_corpus(out, corpus);
    const auto back = parse(out.str());
    REQUIRE(back.size() == corpus.size());
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        CHECK(back[d].id == corpus[d].id);
        CHECK(back[d].split == corpus[d].split);
        REQUIRE(back[d].utterances.size() == corpus[d].utterances.size());
        for (std::size_t i = 0; i < corpus[d].utterances.size(); ++i) {
            CHECK(back[d].utterances[i].speaker == corpus[d].utterances[i].speaker);
            CHECK(back[d].utterances[i].text == corpus[d].utterances[i].text);
            CHECK(back[d].utterances[i].label == corpus[d].utterances[i].label);
        }
    }
    std::ostringstream again;
    write_corpus(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("make_instances contexts") {
    auto corpus = parse(R"({"id":"a","split":"train","utterances":[{"speaker":"x","text":"one","emotion":"joy"},{"speaker":"y","text":"two","emotion":"fear"},{"speaker":"x","text":"three","emotion":"anger"}]})");
    auto inst = make_instances(corpus, 5);
    REQUIRE(inst.size() == 3);
    CHECK(inst[0].context.empty());
    CHECK(inst[1].context.size() == 1);
    CHECK(inst[2].context.size() == 2);
    CHECK(inst[2].context[0].speaker == "x");
    CHECK(inst[2].id == "a#2");
    CHECK(inst[1].label == index_of(Emotion::fear));
    for (const auto& i : make_instances(corpus, 1)) CHECK(i.context.size() <= 1);
    CHECK_THROWS_AS(make_instances(corpus, 0), ContractError);

    auto partial = parse(R"({"id":"a","split":"train","utterances":[{"speaker":"x","text":"one","emotion":"joy"},{"speaker":"y","text":"two","emotion":null}]})");
    CHECK_THROWS_AS(make_instances(partial), IntegrityError);
    auto unlabeled = parse(R"({"id":"a","split":"test","utterances":[{"speaker":"x","text":"one","emotion":null}]})");
    CHECK(make_instances(unlabeled).empty());
}

TEST_CASE("family dialogue instances") {
    const auto corpus = load_corpus(kFixtures / "family_dialogue.jsonl");
    const auto inst = make_instances(corpus);
    REQUIRE(inst.size() == 9);
    const auto& u4 = inst[3];
    REQUIRE(u4.context.size() == 3);
    CHECK(u4.context[0].text == corpus[0].utterances[0].text);
    CHECK(u4.context[2].text == corpus[0].utterances[2].text);
    CHECK(u4.target.speaker == "Maya");
    CHECK(inst[8].context.size() == 5);
}

TEST_CASE("instance count equals labeled utterances for any window") {
    const auto corpus = load_corpus(kFixtures / "family_dialogue.jsonl");
    for (std::size_t w = 1; w < 12; ++w) CHECK(make_instances(corpus, w).size() == 9);
}

TEST_CASE("corpus stats") {
    auto one = parse(R"({"id":"a","split":"train","utterances":[{"speaker":"x","text":"a b c","emotion":"joy"}]})");
    auto s = corpus_stats(one);
    CHECK(s.total.utterances == 1);
    CHECK(s.total.avg_utterance_length == doctest::Approx(3.0));
    CHECK(s.total.max_utterance_length == 3);
    CHECK_THROWS_AS(corpus_stats(Corpus{}), EmptyInputError);

    const auto fixture = load_corpus(kFixtures / "corpus_fixture.jsonl");
    const auto fs = corpus_stats(fixture);
    CHECK(fs.total.dialogues == 2);
    CHECK(fs.total.utterances == 5);
    std::size_t d = 0, u = 0;
    for (const auto& [split, st] : fs.per_split) {
        d += st.dialogues;
        u += st.utterances;
    }
    CHECK(d == fs.total.dialogues);
    CHECK(u == fs.total.utterances);
    const auto report = format_stats(fs);
    CHECK(report.find("total") != std::string::npos);
}

TEST_CASE("splits are disjoint by construction") {
    const auto corpus = load_corpus(kFixtures / "corpus_fixture.jsonl");
    std::set<std::string> ids;
    for (const auto& d : corpus) CHECK(ids.insert(d.id).second);
    CHECK(filter_split(corpus, Split::train).size() + filter_split(corpus, Split::val).size() +
              filter_split(corpus, Split::test).size() ==
          corpus.size());
}
