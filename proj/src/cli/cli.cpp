#include "coffee/cli/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "coffee/core/error.hpp"
#include "coffee/core/tensor.hpp"
#include "coffee/data/corpus.hpp"
#include "coffee/extract/attributes.hpp"
#include "coffee/extract/cache.hpp"
#include "coffee/extract/comet.hpp"
#include "coffee/extract/pipeline.hpp"
#include "coffee/train/metrics.hpp"
#include "coffee/train/model.hpp"
#include "coffee/train/trainer.hpp"

#ifndef COFFEE_ASSETS_DIR
#define COFFEE_ASSETS_DIR "assets"
#endif

namespace coffee {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string corpus;
    std::string lexicons = (fs::path(COFFEE_ASSETS_DIR) / "lexicons").string();
    std::string comet;
    std::string cs;
    std::string model;
    std::string out;
    std::string strategy = "coffee";
    std::string strategies = "none,coffee";
    std::string attributes = "xWant,oReact";
    std::string restriction = "none";
    std::string split = "test";
    std::uint64_t seed = 7;
    std::size_t runs = 1;
    std::size_t threads = 1;
    std::size_t workers = 4;
    bool per_topic = false;
    bool languages = false;
    bool attribute_pairs = false;
    bool attribute_sweep = false;
    TrainConfig train;
    EncoderConfig encoder;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
    f << text;
}

const std::string& require(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw UsageError(std::string("this subcommand needs ") + flag);
    }
    return value;
}

Corpus load_corpus_arg(const RunConfig& rc) { return load_corpus(require(rc.corpus, "--corpus")); }

Lexicons load_lexicons_arg(const RunConfig& rc) { return Lexicons::load(rc.lexicons); }

CommonsenseCache load_cache_arg(const RunConfig& rc) {
    const auto& path = require(rc.cs, "--cs");
    if (!fs::exists(path)) {
        throw IoError("commonsense cache " + path + " does not exist; run extract first");
    }
    return load_cache(path);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

// Resolves names and seeds once the command line and config file are merged.
void finalise(RunConfig& rc) {
    rc.train.seed = rc.seed;
    rc.train.strategy = strategy_from_name(rc.strategy);
    rc.train.attributes = parse_attribute_list(rc.attributes);
    rc.train.restriction = restriction_from_name(rc.restriction);
    rc.encoder.seed = rc.seed;
    rc.train.validate();
    rc.encoder.validate();
}

bool needs_cache(const RunConfig& rc) { return uses_commonsense(rc.train.strategy); }

int cmd_stats(const RunConfig& rc, std::ostream& out) {
    const auto corpus = load_corpus_arg(rc);
    Tagger tagger;
    std::optional<Lexicons> lex;
    if (fs::exists(rc.lexicons)) {
        lex = load_lexicons_arg(rc);
        tagger = [&lex](std::string_view text) { return identify_language(text, *lex); };
    }
    out << format_stats(corpus_stats(corpus, tagger));
    return kExitOk;
}

int cmd_extract(const RunConfig& rc, std::ostream& out) {
    const auto corpus = load_corpus_arg(rc);
    const auto& target = require(rc.comet, "--comet or COFFEE_COMET_URL");
    const auto& cache_path = require(rc.out, "--out");
    const auto lex = load_lexicons_arg(rc);
    CometClient client(make_comet_backend(target), rc.workers);
    auto cache = load_cache(cache_path);
    const auto instances = make_instances(corpus, rc.train.context_window);
    const auto summary = extract_corpus(instances, lex, client, cache, {rc.per_topic, rc.workers});
    if (summary.extracted > 0 || !fs::exists(cache_path)) save_cache(cache_path, cache);
    out << fmt::format("instances {} reused {} extracted {} no_topics {} comet_calls {}\n", summary.instances,
                       summary.reused, summary.extracted, summary.no_topics, client.backend_calls());
    return kExitOk;
}

Model model_for_analysis(const RunConfig& rc, const Corpus& corpus, const CommonsenseCache& cache) {
    if (!rc.model.empty()) return load_model(rc.model);
    std::vector<std::string> texts;
    for (const auto& inst : split_instances(corpus, Split::train, rc.train.context_window)) {
        if (!cache.contains(inst.id)) continue;
        for (auto effect : kEffectTypes) {
            texts.push_back(select_attributes(cache.at(inst.id).result, {std::string(effect)}));
        }
    }
    return Model::init(build_vocab(corpus, rc.train.min_count, texts), rc.encoder, FusionStrategy::coffee,
                       kDefaultAttributes, LanguageRestriction::none, rc.train.context_window, rc.seed);
}

int cmd_correlation(const RunConfig& rc, std::ostream& out) {
    const auto corpus = load_corpus_arg(rc);
    const auto cache = load_cache_arg(rc);
    const auto model = model_for_analysis(rc, corpus, cache);
    const auto instances = split_instances(corpus, split_from_name(rc.split), model.context_window);
    NoGradGuard no_grad;
    std::string csv = "attribute,r,samples,degenerate\n";
    for (auto effect : kEffectTypes) {
        std::vector<std::pair<Tensor, std::size_t>> samples;
        for (const auto& inst : instances) {
            const auto text = select_attributes(cache.at(inst.id).result, {std::string(effect)});
            auto rep = encode_commonsense(text, model.vocab, model.encoder_config, model.encoder,
                                          {.pad_to_max = false});
            samples.emplace_back(rep.d_cs, inst.label);
        }
        const auto entry = correlate_attributes(samples);
        csv += fmt::format("{},{:.6f},{},{}\n", effect, entry.r, entry.samples, entry.degenerate ? 1 : 0);
    }
    if (!rc.out.empty()) write_text(rc.out, csv);
    out << csv;
    return kExitOk;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
    const auto corpus = load_corpus_arg(rc);
    std::optional<CommonsenseCache> cache;
    if (needs_cache(rc)) cache = load_cache_arg(rc);
    std::optional<Lexicons> lex;
    if (rc.train.restriction != LanguageRestriction::none) lex = load_lexicons_arg(rc);
    const fs::path dir = rc.out.empty() ? fs::path("coffee-out") : fs::path(rc.out);
    auto result = train(corpus, rc.train, rc.encoder, cache ? &*cache : nullptr, lex ? &*lex : nullptr,
                        [&out](const EpochLog& e) {
                            out << fmt::format("epoch {} train_loss {:.6f} val_weighted_f1 {:.6f}\n", e.epoch,
                                               e.train_loss, e.val_weighted_f1);
                        });
    fs::create_directories(dir);
    save_model(dir / "model.json", result.model);
    save_vocab(dir / "vocab.txt", result.model.vocab);
    write_train_log(dir / "train_log.csv", result.log);
    out << fmt::format("best epoch {} val_weighted_f1 {:.6f}; model written to {}\n", result.best_epoch,
                       result.best_val_f1, (dir / "model.json").string());
    return kExitOk;
}

struct LoadedEval {
    Model model;
    std::vector<Instance> instances;
    std::optional<CommonsenseCache> cache;
    std::optional<Lexicons> lex;
};

LoadedEval load_for_eval(const RunConfig& rc) {
    LoadedEval le{load_model(require(rc.model, "--model")), {}, {}, {}};
    const auto corpus = load_corpus_arg(rc);
    le.instances = split_instances(corpus, split_from_name(rc.split), le.model.context_window);
    if (uses_commonsense(le.model.strategy)) le.cache = load_cache_arg(rc);
    if (le.model.restriction != LanguageRestriction::none) le.lex = load_lexicons_arg(rc);
    return le;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
    auto le = load_for_eval(rc);
    const auto report = evaluate(le.model, le.instances, le.cache ? &*le.cache : nullptr,
                                 le.lex ? &*le.lex : nullptr, rc.threads);
    if (!rc.out.empty()) {
        const fs::path dir = rc.out;
        write_text(dir / "report.json", to_json(report).dump(2) + "\n");
        write_text(dir / "report.csv", report_csv(report));
        write_text(dir / "confusion.csv", confusion_csv(report));
    }
    out << report_csv(report);
    out << fmt::format("weighted_f1 {:.6f} accuracy {:.6f} instances {}\n", report.weighted_f1, report.accuracy,
                       report.total);
    return kExitOk;
}

int cmd_predict(const RunConfig& rc, std::ostream& out) {
    auto le = load_for_eval(rc);
    const auto preds =
        predict(le.model, le.instances, le.cache ? &*le.cache : nullptr, le.lex ? &*le.lex : nullptr, rc.threads);
    std::ostringstream dump;
    write_prediction_dump(dump, le.instances, preds);
    if (rc.out.empty()) {
        out << dump.str();
        return kExitOk;
    }
    const fs::path dir = rc.out;
    write_text(dir / "predictions.csv", dump.str());
    if (!preds.lambdas.empty()) write_lambda_csv(dir / "lambda.csv", preds.lambdas);
    out << fmt::format("{} predictions written to {}\n", preds.predicted.size(), (dir / "predictions.csv").string());
    return kExitOk;
}

int cmd_ablate(const RunConfig& rc, std::ostream& out) {
    const auto corpus = load_corpus_arg(rc);
    AblationRequest req;
    for (const auto& name : split_list(rc.strategies)) req.strategies.push_back(strategy_from_name(name));
    req.languages = rc.languages;
    req.attribute_pairs = rc.attribute_pairs;
    req.attribute_sweep = rc.attribute_sweep;
    auto conditions = ablation_conditions(req);
    if (conditions.empty()) {
        throw UsageError("ablate needs at least one condition");
    }
    for (std::size_t i = 0; i < req.strategies.size(); ++i) conditions[i].attributes = rc.train.attributes;
    bool any_cs = false;
    bool any_restriction = false;
    for (const auto& c : conditions) {
        any_cs = any_cs || uses_commonsense(c.strategy);
        any_restriction = any_restriction || c.restriction != LanguageRestriction::none;
    }
    std::optional<CommonsenseCache> cache;
    if (any_cs) cache = load_cache_arg(rc);
    std::optional<Lexicons> lex;
    if (any_restriction) lex = load_lexicons_arg(rc);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < rc.runs; ++i) seeds.push_back(rc.seed + i);
    const auto rows = run_ablation(corpus, rc.train, rc.encoder, cache ? &*cache : nullptr, lex ? &*lex : nullptr,
                                   conditions, seeds);
    const auto csv = ablation_csv(rows);
    if (!rc.out.empty()) write_text(fs::path(rc.out) / "ablation.csv", csv);
    out << csv;
    return kExitOk;
}

void add_options(CLI::App& app, RunConfig& rc) {
    app.add_option("--corpus", rc.corpus, "Corpus JSON Lines file")->check(CLI::ExistingFile);
    app.add_option("--lexicons", rc.lexicons, "Lexicon directory")->capture_default_str();
    app.add_option("--comet", rc.comet, "COMET endpoint URL or fixture store path")->envname("COFFEE_COMET_URL");
    app.add_option("--cs", rc.cs, "Commonsense cache file");
    app.add_option("--model", rc.model, "Trained model checkpoint")->check(CLI::ExistingFile);
    app.add_option("--out", rc.out, "Output file or directory");
    app.add_option("--strategy", rc.strategy, "Fusion strategy: coffee, concat, dpa or none")->capture_default_str();
    app.add_option("--strategies", rc.strategies, "Strategies compared by ablate")->capture_default_str();
    app.add_option("--attributes", rc.attributes, "Effect-types fed to the model")->capture_default_str();
    app.add_option("--restriction", rc.restriction, "none, english-only or hindi-only")->capture_default_str();
    app.add_option("--split", rc.split, "Split scored by eval, predict and analyze-correlation")
        ->capture_default_str();
    app.add_option("--seed", rc.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--runs", rc.runs, "Seeds per ablation condition")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_option("--threads", rc.threads, "Scoring threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--workers", rc.workers, "Concurrent extraction workers")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_flag("--per-topic", rc.per_topic, "Query COMET once per topic");
    app.add_flag("--languages", rc.languages, "Add english-only and hindi-only conditions to ablate");
    app.add_flag("--attribute-pairs", rc.attribute_pairs, "Add xWant-only and oReact-only conditions to ablate");
    app.add_flag("--attribute-sweep", rc.attribute_sweep, "Add one condition per effect-type to ablate");

    auto& t = rc.train;
    app.add_option("--epochs", t.epochs)->capture_default_str();
    app.add_option("--batch-size", t.batch_size)->capture_default_str();
    app.add_option("--lr", t.lr)->capture_default_str();
    app.add_option("--patience", t.patience)->capture_default_str();
    app.add_option("--context-window", t.context_window)->capture_default_str();
    app.add_option("--min-count", t.min_count)->capture_default_str();

    auto& e = rc.encoder;
    app.add_option("--d", e.d, "Model width")->capture_default_str();
    app.add_option("--layers", e.layers)->capture_default_str();
    app.add_option("--heads", e.heads)->capture_default_str();
    app.add_option("--max-n", e.max_n)->capture_default_str();
    app.add_option("--max-m", e.max_m)->capture_default_str();
    app.add_option("--ffn-mult", e.ffn_mult)->capture_default_str();
    app.add_option("--dropout", e.dropout)->capture_default_str();
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Commonsense-fused emotion recognition for code-mixed dialogue", "coffee"};
    RunConfig rc;
    add_options(app, rc);
    app.set_config("--config", "", "Flat key = value file; keys are long flag names");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);
    app.fallthrough();

    using Handler = int (*)(const RunConfig&, std::ostream&);
    const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
        {"stats", "Corpus statistics per split", cmd_stats},
        {"extract", "Build the commonsense cache", cmd_extract},
        {"analyze-correlation", "Correlation of each effect-type with the labels", cmd_correlation},
        {"train", "Train a model", cmd_train},
        {"eval", "Score a trained model", cmd_eval},
        {"ablate", "Train and score several conditions", cmd_ablate},
        {"predict", "Per-utterance prediction dump", cmd_predict},
    };
    for (const auto& [name, help, _] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "coffee: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    }

    const auto* chosen = app.get_subcommands().front();
    try {
        finalise(rc);
        for (const auto& [name, _, handler] : commands) {
            if (chosen->get_name() == name) return handler(rc, out);
        }
        throw UsageError("unknown subcommand " + chosen->get_name());
    } catch (const UsageError& e) {
        err << "coffee " << chosen->get_name() << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "coffee " << chosen->get_name() << ": " << e.what() << "\n";
        return kExitFailure;
    } catch (const nlohmann::json::exception& e) {
        err << "coffee " << chosen->get_name() << ": " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace coffee
