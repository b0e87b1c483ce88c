#include "coffee/train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "coffee/core/adam.hpp"
#include "coffee/core/error.hpp"
#include "coffee/core/ops.hpp"

namespace coffee {

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0 || patience == 0 || context_window == 0) {
        throw ContractError("train config: epochs, batch_size, patience and context_window must be positive");
    }
    if (!(lr >= 0.0)) {
        throw ContractError("train config: lr must be nonnegative");
    }
    check_selection(attributes);
}

std::vector<Instance> split_instances(const Corpus& corpus, Split split, std::size_t context_window) {
    return make_instances(filter_split(corpus, split), context_window);
}

std::size_t argmax(const std::array<double, kEmotionCount>& logits) {
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

namespace {

Predictions predict_prepared(const Model& model, const std::vector<PreparedInstance>& prepared,
                             std::size_t threads) {
    Predictions out;
    const std::size_t n = prepared.size();
    out.ids.resize(n);
    out.gold.resize(n);
    out.predicted.resize(n);
    out.logits.resize(n);
    std::vector<std::optional<LambdaRecord>> lambdas(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        NoGradGuard no_grad;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                FusionOutput telemetry;
                const auto logits = forward(model, prepared[i], {}, &telemetry);
                std::copy_n(logits.data().begin(), kEmotionCount, out.logits[i].begin());
                out.ids[i] = prepared[i].id;
                out.gold[i] = prepared[i].label;
                out.predicted[i] = argmax(out.logits[i]);
                if (telemetry.lambda_k) lambdas[i] = lambda_record(prepared[i].id, telemetry);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (auto& l : lambdas) {
        if (l) out.lambdas.push_back(std::move(*l));
    }
    return out;
}

std::vector<std::string> commonsense_texts(const std::vector<Instance>& instances, const CommonsenseCache& cache,
                                           const std::vector<std::string>& attributes) {
    std::vector<std::string> texts;
    texts.reserve(instances.size());
    for (const auto& inst : instances) texts.push_back(select_attributes(cache.at(inst.id).result, attributes));
    return texts;
}

} // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const EncoderConfig& encoder_cfg,
                  const CommonsenseCache* cache, const Lexicons* lexicons, const EpochCallback& on_epoch) {
    cfg.validate();
    encoder_cfg.validate();
    const auto train_set = split_instances(corpus, Split::train, cfg.context_window);
    if (train_set.empty()) {
        throw EmptyInputError("train: the train split has no labeled instances");
    }
    auto select_set = split_instances(corpus, Split::val, cfg.context_window);
    if (select_set.empty()) select_set = train_set;

    std::vector<std::string> extra;
    if (uses_commonsense(cfg.strategy)) {
        if (cache == nullptr) {
            throw IntegrityError(fmt::format("strategy {} needs a commonsense cache", strategy_name(cfg.strategy)));
        }
        extra = commonsense_texts(train_set, *cache, cfg.attributes);
    }

    Rng master(cfg.seed);
    const std::uint64_t init_seed = master.next_u64();
    Rng order_rng = master.fork();
    Rng dropout_rng = master.fork();

    TrainResult result;
    result.model = Model::init(build_vocab(corpus, cfg.min_count, extra), encoder_cfg, cfg.strategy, cfg.attributes,
                               cfg.restriction, cfg.context_window, init_seed);
    Model& model = result.model;
    const auto prepared_train = prepare_instances(model, train_set, cache, lexicons);
    const auto prepared_select = prepare_instances(model, select_set, cache, lexicons);

    auto trainable = tensors_of(model.trainable_parameters());
    Adam adam(trainable, AdamConfig{.lr = cfg.lr});
    std::size_t step = 0;
    auto best = snapshot(model.parameters());
    std::size_t since_best = 0;

    std::vector<std::size_t> order(prepared_train.size());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto& t : trainable) t.zero_grad();
            Tensor total;
            for (std::size_t i = start; i < end; ++i) {
                const auto& inst = prepared_train[order[i]];
                const auto loss = cross_entropy(forward(model, inst, {.dropout_rng = &dropout_rng}), inst.label);
                total = total.defined() ? add(total, loss) : loss;
            }
            loss_sum += total.item();
            backward(scale(total, 1.0 / static_cast<double>(end - start)));
            for (auto& t : trainable) (void)t.mutable_grad();
            adam.step(++step);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(prepared_train.size());
        const auto preds = predict_prepared(model, prepared_select, 1);
        entry.val_weighted_f1 = compute_report(preds.gold, preds.predicted).weighted_f1;
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);

        if (epoch == 1 || entry.val_weighted_f1 > result.best_val_f1) {
            result.best_val_f1 = entry.val_weighted_f1;
            result.best_epoch = epoch;
            best = snapshot(model.parameters());
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    restore(model.parameters(), best);
    return result;
}

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training log " + path.string());
    out << "epoch,train_loss,val_weighted_f1\n";
    for (const auto& e : log) out << fmt::format("{},{:.8f},{:.6f}\n", e.epoch, e.train_loss, e.val_weighted_f1);
}

Predictions predict(const Model& model, const std::vector<Instance>& instances, const CommonsenseCache* cache,
                    const Lexicons* lexicons, std::size_t threads) {
    return predict_prepared(model, prepare_instances(model, instances, cache, lexicons), threads);
}

EvalReport evaluate(const Model& model, const std::vector<Instance>& instances, const CommonsenseCache* cache,
                    const Lexicons* lexicons, std::size_t threads) {
    if (instances.empty()) {
        throw EmptyInputError("evaluate: no instances to evaluate");
    }
    const auto preds = predict(model, instances, cache, lexicons, threads);
    return compute_report(preds.gold, preds.predicted);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

} // namespace

void write_prediction_dump(std::ostream& out, const std::vector<Instance>& instances, const Predictions& predictions) {
    if (instances.size() != predictions.predicted.size()) {
        throw ContractError("prediction dump: instance and prediction counts differ");
    }
    out << "id,speaker,utterance,gold,predicted\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        out << csv_field(instances[i].id) << ',' << csv_field(instances[i].target.speaker) << ','
            << csv_field(instances[i].target.text) << ',' << kEmotionNames[instances[i].label] << ','
            << kEmotionNames[predictions.predicted[i]] << '\n';
    }
}

std::vector<AblationCondition> ablation_conditions(const AblationRequest& request) {
    std::vector<AblationCondition> out;
    for (auto s : request.strategies) out.push_back({std::string(strategy_name(s)), s, kDefaultAttributes, {}});
    if (request.languages) {
        out.push_back({"english-only", FusionStrategy::coffee, kDefaultAttributes, LanguageRestriction::english_only});
        out.push_back({"hindi-only", FusionStrategy::coffee, kDefaultAttributes, LanguageRestriction::hindi_only});
    }
    if (request.attribute_pairs) {
        out.push_back({"xWant-only", FusionStrategy::coffee, {"xWant"}, {}});
        out.push_back({"oReact-only", FusionStrategy::coffee, {"oReact"}, {}});
        out.push_back({"xWant+oReact", FusionStrategy::coffee, {"xWant", "oReact"}, {}});
    }
    if (request.attribute_sweep) {
        for (auto e : kEffectTypes) {
            out.push_back({"attr-" + std::string(e), FusionStrategy::coffee, {std::string(e)}, {}});
        }
    }
    return out;
}

std::vector<AblationRow> run_ablation(const Corpus& corpus, const TrainConfig& base, const EncoderConfig& encoder_cfg,
                                      const CommonsenseCache* cache, const Lexicons* lexicons,
                                      const std::vector<AblationCondition>& conditions,
                                      const std::vector<std::uint64_t>& seeds) {
    if (conditions.empty()) throw ContractError("run_ablation: no conditions requested");
    if (seeds.empty()) throw ContractError("run_ablation: no seeds given");
    auto eval_set = split_instances(corpus, Split::test, base.context_window);
    if (eval_set.empty()) eval_set = split_instances(corpus, Split::val, base.context_window);
    if (eval_set.empty()) throw EmptyInputError("run_ablation: no test or val instances to score");

    std::vector<AblationRow> rows;
    for (const auto& condition : conditions) {
        AblationRow row;
        row.condition = condition;
        for (auto seed : seeds) {
            TrainConfig cfg = base;
            cfg.strategy = condition.strategy;
            cfg.attributes = condition.attributes;
            cfg.restriction = condition.restriction;
            cfg.seed = seed;
            const auto trained = train(corpus, cfg, encoder_cfg, cache, lexicons);
            const auto report = evaluate(trained.model, eval_set, cache, lexicons);
            for (std::size_t c = 0; c < kEmotionCount; ++c) row.per_class_f1[c] += report.per_class_f1[c];
            row.seed_weighted_f1.push_back(report.weighted_f1);
        }
        const double k = static_cast<double>(seeds.size());
        for (auto& f : row.per_class_f1) f /= k;
        row.weighted_f1 = std::accumulate(row.seed_weighted_f1.begin(), row.seed_weighted_f1.end(), 0.0) / k;
        if (seeds.size() >= 2 && !rows.empty()) {
            row.versus_first = paired_t_test(row.seed_weighted_f1, rows.front().seed_weighted_f1);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    const bool with_test = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.seed_weighted_f1.size() >= 2; });
    std::string out = "condition,strategy,attributes,restriction";
    for (auto name : kEmotionNames) out += fmt::format(",{}", name);
    out += ",weighted_f1";
    if (with_test) out += ",t_vs_first,p_vs_first";
    out += '\n';
    for (const auto& r : rows) {
        std::string attrs;
        for (const auto& a : r.condition.attributes) attrs += (attrs.empty() ? "" : "+") + a;
        out += fmt::format("{},{},{},{}", r.condition.name, strategy_name(r.condition.strategy), attrs,
                           restriction_name(r.condition.restriction));
        for (double f : r.per_class_f1) out += fmt::format(",{:.4f}", f);
        out += fmt::format(",{:.4f}", r.weighted_f1);
        if (with_test) {
            if (r.versus_first) {
                out += fmt::format(",{:.4f},{:.4f}", r.versus_first->t, r.versus_first->p);
            } else {
                out += ",,";
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace coffee
