#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "coffee/data/corpus.hpp"
#include "coffee/extract/attributes.hpp"
#include "coffee/extract/cache.hpp"
#include "coffee/extract/lexicons.hpp"
#include "coffee/train/metrics.hpp"
#include "coffee/train/model.hpp"

namespace coffee {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 8;
    double lr = 1e-3;
    std::uint64_t seed = 7;
    // Stop after this many epochs without a better validation weighted F1.
    std::size_t patience = 5;
    FusionStrategy strategy = FusionStrategy::coffee;
    std::vector<std::string> attributes = kDefaultAttributes;
    LanguageRestriction restriction = LanguageRestriction::none;
    std::size_t context_window = kDefaultContextWindow;
    std::size_t min_count = 1;

    // ContractError on zero epochs, batch size, patience or window, or lr < 0.
    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_weighted_f1 = 0.0;
};

struct TrainResult {
    Model model; // parameters of the best validation epoch
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_f1 = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains on the train split and selects on the val split (on the train split
// when there is no val data). The vocabulary covers train utterances,
// speakers and, for commonsense strategies, the selected train commonsense.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const EncoderConfig& encoder_cfg,
                  const CommonsenseCache* cache, const Lexicons* lexicons, const EpochCallback& on_epoch = {});

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

struct Predictions {
    std::vector<std::string> ids;
    std::vector<std::size_t> gold;
    std::vector<std::size_t> predicted;
    std::vector<std::array<double, kEmotionCount>> logits;
    std::vector<LambdaRecord> lambdas; // coffee strategy only
};

// Deterministic; instances may be scored on several threads.
Predictions predict(const Model& model, const std::vector<Instance>& instances, const CommonsenseCache* cache,
                    const Lexicons* lexicons, std::size_t threads = 1);

// Index of the largest logit, first wins on ties.
std::size_t argmax(const std::array<double, kEmotionCount>& logits);

// EmptyInputError on no instances.
EvalReport evaluate(const Model& model, const std::vector<Instance>& instances, const CommonsenseCache* cache,
                    const Lexicons* lexicons, std::size_t threads = 1);

// Per-utterance dump: id,speaker,utterance,gold,predicted as CSV.
void write_prediction_dump(std::ostream& out, const std::vector<Instance>& instances, const Predictions& predictions);

// Instances of one split, in corpus order.
std::vector<Instance> split_instances(const Corpus& corpus, Split split, std::size_t context_window);

struct AblationCondition {
    std::string name;
    FusionStrategy strategy = FusionStrategy::coffee;
    std::vector<std::string> attributes = kDefaultAttributes;
    LanguageRestriction restriction = LanguageRestriction::none;
};

struct AblationRequest {
    std::vector<FusionStrategy> strategies;
    // english-only and hindi-only with the coffee strategy.
    bool languages = false;
    // xWant only, oReact only, both (coffee).
    bool attribute_pairs = false;
    // Each of the nine effect-types alone (coffee).
    bool attribute_sweep = false;
};

std::vector<AblationCondition> ablation_conditions(const AblationRequest& request);

struct AblationRow {
    AblationCondition condition;
    // Per-class and weighted F1 averaged over seeds.
    ClassArray per_class_f1{};
    double weighted_f1 = 0.0;
    std::vector<double> seed_weighted_f1;
    // Against the first condition, when two or more seeds ran.
    std::optional<TTestResult> versus_first;
};

// Trains and evaluates every condition for every seed; scores on the test
// split (val when test is empty).
std::vector<AblationRow> run_ablation(const Corpus& corpus, const TrainConfig& base, const EncoderConfig& encoder_cfg,
                                      const CommonsenseCache* cache, const Lexicons* lexicons,
                                      const std::vector<AblationCondition>& conditions,
                                      const std::vector<std::uint64_t>& seeds);

// condition,strategy,attributes,restriction,<eight classes>,weighted_f1[,t,p]
std::string ablation_csv(const std::vector<AblationRow>& rows);

} // namespace coffee
