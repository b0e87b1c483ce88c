#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coffee/cli/cli.hpp"

using namespace coffee;

namespace {

namespace fs = std::filesystem;

const fs::path kAssets = COFFEE_ASSETS_DIR;

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "coffee");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("coffee_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const std::string kCorpus = (kAssets / "fixtures" / "corpus_fixture.jsonl").string();
const std::string kComet = (kAssets / "fixtures" / "comet_fixture.json").string();

} // namespace

TEST_CASE("stats on the fixture corpus") {
    auto r = run({"stats", "--corpus", kCorpus});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line, total;
    while (std::getline(lines, line))
        if (line.starts_with("total")) total = line;
    std::istringstream fields(total);
    std::string name;
    std::size_t dialogues = 0, utterances = 0;
    fields >> name >> dialogues >> utterances;
    CHECK(dialogues == 2);
    CHECK(utterances == 5);
}

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"stats", "--no-such-flag"}).code == kExitUsage);
    CHECK(run({"stats"}).code == kExitUsage);
    CHECK(run({"stats", "--corpus", "/no/such/file.jsonl"}).code == kExitUsage);
    TempDir dir;
    std::ofstream(dir.path / "bad.toml") << "no_such_key = 3\n";
    CHECK(run({"stats", "--config", (dir.path / "bad.toml").string(), "--corpus", kCorpus}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("module errors exit 1") {
    auto r = run({"train", "--corpus", kCorpus, "--strategy", "sum"});
    CHECK(r.code == kExitFailure);
    CHECK(r.err.find("sum") != std::string::npos);
    CHECK(run({"train", "--corpus", kCorpus, "--cs", "/no/such/cache.json"}).code == kExitFailure);
    CHECK(run({"train", "--corpus", kCorpus, "--attributes", "xWish"}).code == kExitFailure);
}

TEST_CASE("extract, rerun as a no-op, then train, eval and predict") {
    TempDir dir;
    const auto cache = (dir.path / "cache.json").string();
    auto first = run({"extract", "--corpus", kCorpus, "--comet", kComet, "--out", cache});
    REQUIRE(first.code == 0);
    CHECK(first.out.find("extracted 5") != std::string::npos);
    const auto bytes = slurp(cache);
    const auto stamp = fs::last_write_time(cache);
    auto second = run({"extract", "--corpus", kCorpus, "--comet", kComet, "--out", cache});
    REQUIRE(second.code == 0);
    CHECK(second.out.find("extracted 0") != std::string::npos);
    CHECK(second.out.find("comet_calls 0") != std::string::npos);
    CHECK(slurp(cache) == bytes);
    CHECK(fs::last_write_time(cache) == stamp);

    const auto model_dir = (dir.path / "model").string();
    const std::vector<std::string> small = {"--epochs", "2", "--d", "8", "--heads", "2", "--layers", "1"};
    std::vector<std::string> train_args = {"train", "--corpus", kCorpus, "--cs", cache, "--out", model_dir};
    train_args.insert(train_args.end(), small.begin(), small.end());
    auto t = run(train_args);
    REQUIRE(t.code == 0);
    CHECK(fs::exists(fs::path(model_dir) / "model.json"));
    CHECK(fs::exists(fs::path(model_dir) / "vocab.txt"));
    CHECK(fs::exists(fs::path(model_dir) / "train_log.csv"));

    const auto model = (fs::path(model_dir) / "model.json").string();
    auto e = run({"eval", "--corpus", kCorpus, "--cs", cache, "--model", model, "--out", (dir.path / "ev").string()});
    REQUIRE(e.code == 0);
    CHECK(e.out.find("weighted_f1") != std::string::npos);
    CHECK(fs::exists(dir.path / "ev" / "confusion.csv"));

    auto p = run({"predict", "--corpus", kCorpus, "--cs", cache, "--model", model, "--out", (dir.path / "pr").string()});
    REQUIRE(p.code == 0);
    const auto dump = slurp(dir.path / "pr" / "predictions.csv");
    CHECK(dump.starts_with("id,speaker,utterance,gold,predicted\n"));
    CHECK(dump.find("fx-2#2,Rosesh,") != std::string::npos);
    CHECK(fs::exists(dir.path / "pr" / "lambda.csv"));

    auto c = run({"analyze-correlation", "--corpus", kCorpus, "--cs", cache, "--split", "train", "--d", "8", "--heads",
                  "2"});
    REQUIRE(c.code == 0);
    CHECK(c.out.starts_with("attribute,r,samples,degenerate\n"));
}

TEST_CASE("ablate is byte-identical across runs and config files apply") {
    TempDir dir;
    const auto cache = (dir.path / "cache.json").string();
    REQUIRE(run({"extract", "--corpus", kCorpus, "--comet", kComet, "--out", cache}).code == 0);
    const auto cfg = dir.path / "run.toml";
    std::ofstream(cfg) << "# small model\nepochs = 2\nd = 8\nheads = 2\nlayers = 1\nstrategies = \"none,coffee\"\n";
    auto ablate = [&](const std::string& out) {
        return run({"ablate", "--config", cfg.string(), "--corpus", kCorpus, "--cs", cache, "--seed", "7", "--out",
                    (dir.path / out).string()});
    };
    auto a = ablate("a");
    auto b = ablate("b");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto csv = slurp(dir.path / "a" / "ablation.csv");
    CHECK(csv == slurp(dir.path / "b" / "ablation.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
