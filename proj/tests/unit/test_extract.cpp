#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "coffee/core/error.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/core/tensor.hpp"
#include "coffee/data/corpus.hpp"
#include "coffee/extract/attributes.hpp"
#include "coffee/extract/cache.hpp"
#include "coffee/extract/comet.hpp"
#include "coffee/extract/pipeline.hpp"

using namespace coffee;

namespace {

const std::filesystem::path kAssets(COFFEE_ASSETS_DIR);

const Lexicons& lexicons() {
    static const Lexicons lex = Lexicons::load(kAssets / "lexicons");
    return lex;
}

LanguageTaggedToken tok(std::string surface, LanguageTag tag) {
    LanguageTaggedToken t;
    t.surface = std::move(surface);
    t.tag = tag;
    return t;
}

nlohmann::json sample_response(const std::string& marker) {
    nlohmann::json body = nlohmann::json::object();
    for (auto e : kEffectTypes) body[std::string(e)] = {marker + " " + std::string(e)};
    return body;
}

// Local COMET stand-in: counts requests, optionally fails the first few.
struct FakeComet {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    std::atomic<int> failures_left{0};

    FakeComet() {
        server.Post("/comet", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            if (failures_left.load() > 0) {
                --failures_left;
                res.status = 503;
                return;
            }
            const auto q = nlohmann::json::parse(req.body).at("query").get<std::string>();
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            res.set_content(sample_response(q).dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeComet() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/comet"; }
};

} // namespace

TEST_CASE("language identification on a code-mixed utterance") {
    const auto tokens = identify_language("Khatam ho gaya Sahil it's over!", lexicons());
    REQUIRE(tokens.size() == 6);
    CHECK(tokens[0].tag == LanguageTag::hindi_roman);
    CHECK(tokens[1].tag == LanguageTag::hindi_roman);
    CHECK(tokens[2].tag == LanguageTag::hindi_roman);
    CHECK(tokens[3].tag == LanguageTag::proper_noun);
    CHECK(tokens[4].tag == LanguageTag::english);
    CHECK(tokens[5].tag == LanguageTag::english);
    CHECK(identify_language("zindagi", lexicons())[0].tag == LanguageTag::hindi_roman);
    CHECK(identify_language("क्या", lexicons())[0].tag == LanguageTag::hindi_devanagari);
    CHECK(identify_language("", lexicons()).empty());
    CHECK(identify_language("qwertyuiop", lexicons())[0].tag == LanguageTag::other);
}

TEST_CASE("transliteration") {
    const auto ghar = transliterate(tok("ghar", LanguageTag::hindi_roman), lexicons());
    CHECK(ghar.surface == "घर");
    CHECK(ghar.tag == LanguageTag::hindi_devanagari);
    CHECK(ghar.origin == "ghar");
    CHECK_FALSE(ghar.passthrough);
    CHECK_THROWS_AS((void)transliterate(tok("घर", LanguageTag::hindi_devanagari), lexicons()), ContractError);
    const auto miss = transliterate(tok("xyzzy", LanguageTag::hindi_roman), lexicons());
    CHECK(miss.surface == "xyzzy");
    CHECK(miss.passthrough);
    CHECK(transliterate(tok("Zindagi", LanguageTag::hindi_roman), lexicons()).surface == "ज़िंदगी");
}

TEST_CASE("preprocess") {
    auto out = preprocess({tok("Over!", LanguageTag::english), tok("the", LanguageTag::english),
                           tok("घर", LanguageTag::hindi_devanagari), tok("...", LanguageTag::other),
                           tok("है", LanguageTag::hindi_devanagari)},
                          lexicons());
    REQUIRE(out.size() == 2);
    CHECK(out[0].surface == "over");
    CHECK(out[1].surface == "घर");
    CHECK(out[1].tag == LanguageTag::hindi_devanagari);
}

TEST_CASE("translate topics") {
    auto kachori = tok("कचौरी", LanguageTag::hindi_devanagari);
    kachori.origin = "kachori";
    const auto set = translate_topics({tok("घर", LanguageTag::hindi_devanagari), tok("over", LanguageTag::english),
                                       kachori, tok("घर", LanguageTag::hindi_devanagari)},
                                      lexicons());
    CHECK(set.topics == std::vector<std::string>{"house", "over", "kachori"});
    CHECK(set.untranslated == std::vector<std::string>{"कचौरी"});
    CHECK(set.query() == "house over kachori");
}

TEST_CASE("pipeline on the opening family utterance") {
    const auto trace = extract_topics("Khatam ho gaya Sahil it's over!", lexicons());
    CHECK(trace.transliterated[0].surface == "खतम");
    CHECK(trace.transliterated[1].surface == "हो");
    CHECK(trace.topics.topics == std::vector<std::string>{"finished", "sahil", "over"});
    CHECK(extract_topics("Khatam ho gaya Sahil it's over!", lexicons()).topics == trace.topics);
}

TEST_CASE("topic sets stay clean on fuzzed utterances") {
    Rng rng(2024);
    std::vector<std::string> pool;
    for (const auto& w : lexicons().english) pool.push_back(w);
    for (const auto& w : lexicons().hindi_roman) pool.push_back(w);
    for (const auto& w : lexicons().stopwords_hi) pool.push_back(w);
    for (const auto& [dev, en] : lexicons().translation) pool.push_back(dev);
    std::sort(pool.begin(), pool.end());
    pool.insert(pool.end(), {"Sahil", "!!", "x-y", "it's", "'", "ÄÖÜ", "naïve", "12", "क्या?", "...", "OVER"});
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        for (std::size_t i = 0, n = rng.below(15); i < n; ++i) {
            text += pool[rng.below(pool.size())];
            text += rng.below(4) == 0 ? ", " : " ";
        }
        const auto set = extract_topics(text, lexicons()).topics;
        std::unordered_set<std::string> seen;
        for (const auto& t : set.topics) {
            CHECK_FALSE(t.empty());
            CHECK(is_ascii(t));
            CHECK_FALSE(lexicons().stopwords_en.contains(t));
            CHECK(seen.insert(t).second);
        }
    }
}

TEST_CASE("comet response schema") {
    CHECK(parse_comet_response(sample_response("x")).effects.size() == 9);
    auto missing = sample_response("x");
    missing.erase("xWant");
    CHECK_THROWS_AS(parse_comet_response(missing), ProtocolError);
    auto extra = sample_response("x");
    extra["xFoo"] = nlohmann::json::array();
    CHECK_THROWS_AS(parse_comet_response(extra), ProtocolError);
    auto empty_phrase = sample_response("x");
    empty_phrase["oReact"] = {""};
    CHECK_THROWS_AS(parse_comet_response(empty_phrase), ProtocolError);
    CHECK_THROWS_AS(parse_comet_response(nlohmann::json::array()), ProtocolError);
}

TEST_CASE("fixture client answers from the store and caches") {
    CometClient client(FixtureCometBackend::from_file(kAssets / "fixtures" / "comet_fixture.json"));
    CHECK_FALSE(client.uses_network());
    TopicSet topics{{"walk", "20", "kilometers"}, {}};
    const auto result = query_comet(topics, client);
    const auto& react = result.at("xReact");
    CHECK(std::find(react.begin(), react.end(), "tired") != react.end());
    CHECK(result.effects.size() == 9);
    CHECK(client.backend_calls() == 1);
    CHECK(query_comet(topics, client) == result);
    CHECK(client.backend_calls() == 1);
    CHECK(client.cache_hits() == 1);
    CHECK_THROWS_AS(query_comet(TopicSet{}, client), EmptyInputError);
    CHECK_THROWS_AS(query_comet(TopicSet{{"unknown"}, {}}, client), ServiceError);
    CHECK(client.export_fixtures().size() == 1);
}

TEST_CASE("http client issues one request per distinct query under concurrency") {
    FakeComet fake;
    CometClient client(std::make_unique<HttpCometBackend>(HttpCometConfig{.url = fake.url()}), 4);
    CHECK(client.uses_network());
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int i = 0; i < 16; ++i) {
        threads.emplace_back([&, i] {
            const auto r = client.query(i % 2 == 0 ? "walk far" : "eat kachori");
            if (r.at("xWant").size() == 1) ++ok;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 16);
    CHECK(fake.requests == 2);
    CHECK(client.backend_calls() == 2);
}

TEST_CASE("http client retries transient failures") {
    FakeComet fake;
    fake.failures_left = 2;
    HttpCometConfig cfg{.url = fake.url(), .timeout = std::chrono::milliseconds(2000), .max_attempts = 3,
                        .backoff = std::chrono::milliseconds(1)};
    CometClient client(std::make_unique<HttpCometBackend>(cfg));
    CHECK(client.query("walk").at("oEffect").front() == "walk oEffect");
    CHECK(fake.requests == 3);
}

TEST_CASE("endpoint down raises service error with attempt count") {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpCometConfig cfg{.url = "http://127.0.0.1:" + std::to_string(port) + "/comet",
                        .timeout = std::chrono::milliseconds(300), .max_attempts = 3,
                        .backoff = std::chrono::milliseconds(1)};
    CometClient client(std::make_unique<HttpCometBackend>(cfg));
    try {
        (void)client.query("walk");
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        CHECK(e.attempts() == 3);
        CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    }
    // Failures are not cached; a later call tries again.
    CHECK_THROWS_AS((void)client.query("walk"), ServiceError);
    CHECK(client.backend_calls() == 2);
    CHECK_THROWS_AS(HttpCometBackend(HttpCometConfig{.url = "https://example.org"}), ContractError);
}

TEST_CASE("per-topic querying merges phrases") {
    nlohmann::json store;
    store["walk"] = sample_response("same");
    store["far"] = sample_response("same");
    store["far"]["xWant"] = {"same xWant", "to rest"};
    CometClient client(std::make_unique<FixtureCometBackend>(store));
    const auto merged = query_comet_per_topic(TopicSet{{"walk", "far"}, {}}, client);
    CHECK(merged.at("xWant") == std::vector<std::string>{"same xWant", "to rest"});
    CHECK(client.backend_calls() == 2);
}

TEST_CASE("select attributes") {
    auto result = parse_comet_response(sample_response("p"));
    const auto text = select_attributes(result);
    CHECK(text == "<xWant> p xWant <oReact> p oReact");
    CHECK(text.find("xWant") < text.find("oReact"));
    CHECK(select_attributes(result, {"xAttr"}) == "<xAttr> p xAttr");
    CHECK_THROWS_AS((void)select_attributes(result, {"xFoo"}), SelectionError);
    result.effects["xWant"] = {"to rest", "to eat"};
    CHECK(select_attributes(result, {"xWant"}) == "<xWant> to rest ; to eat");
    result.effects["xWant"].clear();
    result.effects["oReact"].clear();
    CHECK(select_attributes(result).empty());
    CHECK_FALSE(select_attributes(result, {"xWant", "xAttr"}).empty());
    CHECK(parse_attribute_list("xWant, oReact") == kDefaultAttributes);
    CHECK_THROWS_AS(parse_attribute_list(""), SelectionError);
}

TEST_CASE("attribute correlation") {
    auto row = [](double v) { return Tensor::from(Shape{1, 2}, {v - 1.0, v + 1.0}); };
    auto r = correlate_attributes({{row(1), 0}, {row(2), 2}, {row(3), 1}});
    CHECK(r.r == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(r.degenerate);
    CHECK(r.samples == 3);
    auto flat = correlate_attributes({{row(4), 0}, {row(4), 3}, {row(4), 1}});
    CHECK(flat.r == 0.0);
    CHECK(flat.degenerate);
    auto exact = correlate_attributes({{row(0), 0}, {row(5), 5}, {row(2), 2}});
    CHECK(exact.r == doctest::Approx(1.0));
    CHECK_THROWS_AS(correlate_attributes({{row(1), 1}}), SampleError);
}

TEST_CASE("commonsense cache round trip and incremental extraction") {
    const auto corpus = load_corpus(kAssets / "fixtures" / "corpus_fixture.jsonl");
    const auto instances = make_instances(corpus);
    CometClient client(FixtureCometBackend::from_file(kAssets / "fixtures" / "comet_fixture.json"));
    CommonsenseCache cache;
    const auto first = extract_corpus(instances, lexicons(), client, cache);
    CHECK(first.extracted == instances.size());
    CHECK(cache.instances.size() == instances.size());
    const auto calls = client.backend_calls();
    const auto second = extract_corpus(instances, lexicons(), client, cache);
    CHECK(second.extracted == 0);
    CHECK(second.reused == instances.size());
    CHECK(client.backend_calls() == calls);

    const auto path = std::filesystem::temp_directory_path() / "coffee_cache_test.json";
    save_cache(path, cache);
    const auto back = load_cache(path);
    CHECK(back.instances == cache.instances);
    std::filesystem::remove(path);
    CHECK(load_cache(path).instances.empty());
    CHECK_THROWS_AS((void)cache.at("nope"), IntegrityError);
    CHECK_THROWS_AS(cache_from_json(nlohmann::json{{"format", "other"}}), ParseError);
}
