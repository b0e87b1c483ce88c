#include "coffee/train/model.hpp"

#include "coffee/core/checkpoint.hpp"
#include "coffee/core/error.hpp"
#include "coffee/core/ops.hpp"
#include "coffee/extract/attributes.hpp"
#include "coffee/extract/pipeline.hpp"

namespace coffee {

ClassifierParams ClassifierParams::init(std::size_t d, Rng& rng) {
    return {xavier_uniform(d, kEmotionCount, rng), trainable_full(1, kEmotionCount, 0.0)};
}

ParameterList ClassifierParams::parameters() const { return {{"head.w", head_w}, {"head.b", head_b}}; }

Tensor classify(const Tensor& fused, std::size_t begin, std::size_t end, const ClassifierParams& params) {
    if (begin >= end || end > fused.rows()) {
        throw ContractError("classify: target span [" + std::to_string(begin) + ", " + std::to_string(end) +
                            ") is empty or outside " + std::to_string(fused.rows()) + " rows");
    }
    const Tensor pooled = mean_pool_rows(slice_rows(fused, begin, end));
    return add(matmul(pooled, params.head_w), params.head_b);
}

Tensor cross_entropy(const Tensor& logits, std::size_t gold) {
    if (gold >= kEmotionCount) {
        throw LabelError("cross_entropy: gold index " + std::to_string(gold) + " outside [0, 8)");
    }
    if (logits.rows() != 1 || logits.cols() != kEmotionCount) {
        throw DimensionError("cross_entropy: logits must be [1x8], got " + logits.shape().str());
    }
    return scale(pick(log_softmax_rows(logits), gold), -1.0);
}

Model Model::init(Vocab vocab, const EncoderConfig& cfg, FusionStrategy strategy,
                  std::vector<std::string> attributes, LanguageRestriction restriction,
                  std::size_t context_window, std::uint64_t seed) {
    cfg.validate();
    check_selection(attributes);
    Model m;
    m.encoder_config = cfg;
    m.vocab = std::move(vocab);
    m.strategy = strategy;
    m.attributes = std::move(attributes);
    m.restriction = restriction;
    m.context_window = context_window;
    Rng rng(seed);
    m.encoder = EncoderParams::init(m.vocab.size(), cfg, rng);
    m.fusion = FusionParams::init(cfg.d, rng);
    m.head = ClassifierParams::init(cfg.d, rng);
    return m;
}

ParameterList Model::parameters() const {
    ParameterList out = encoder.parameters();
    for (auto& p : fusion.parameters()) out.push_back(p);
    for (auto& p : head.parameters()) out.push_back(p);
    return out;
}

ParameterList Model::trainable_parameters() const {
    ParameterList out;
    for (auto& p : encoder.parameters()) {
        if (p.name.starts_with("cs.") && strategy != FusionStrategy::coffee && strategy != FusionStrategy::dpa) {
            continue;
        }
        out.push_back(p);
    }
    if (strategy == FusionStrategy::coffee) {
        for (auto& p : fusion.parameters()) out.push_back(p);
    } else if (strategy == FusionStrategy::dpa) {
        out.push_back({"fusion.w_q", fusion.w_q});
        out.push_back({"fusion.w_k", fusion.w_k});
        out.push_back({"fusion.w_v", fusion.w_v});
    }
    for (auto& p : head.parameters()) out.push_back(p);
    return out;
}

nlohmann::json Model::meta() const {
    return {{"model", "coffee-erc"},
            {"encoder", to_json(encoder_config)},
            {"strategy", strategy_name(strategy)},
            {"attributes", attributes},
            {"restriction", restriction_name(restriction)},
            {"context_window", context_window},
            {"vocab", std::vector<std::string>(vocab.tokens().begin() + Vocab::kSpecialCount, vocab.tokens().end())}};
}

void save_model(const std::filesystem::path& path, const Model& model) {
    save_checkpoint(path, model.parameters(), model.meta());
}

Model load_model(const std::filesystem::path& path) {
    const auto ckpt = load_checkpoint(path);
    const auto& meta = ckpt.meta;
    try {
        Model m = Model::init(Vocab(meta.at("vocab").get<std::vector<std::string>>()),
                              encoder_config_from_json(meta.at("encoder")),
                              strategy_from_name(meta.at("strategy").get<std::string>()),
                              meta.at("attributes").get<std::vector<std::string>>(),
                              restriction_from_name(meta.at("restriction").get<std::string>()),
                              meta.at("context_window").get<std::size_t>(), 0);
        restore(m.parameters(), ckpt.params);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path.string() + " has malformed model metadata: " + e.what());
    }
}

namespace {

void tag_utterance(Utterance& u, const Lexicons& lex) { u.tokens = identify_language(u.text, lex); }

} // namespace

std::vector<PreparedInstance> prepare_instances(const Model& model, const std::vector<Instance>& instances,
                                                const CommonsenseCache* cache, const Lexicons* lexicons) {
    if (model.restriction != LanguageRestriction::none && lexicons == nullptr) {
        throw ContractError("language-restricted input needs lexicons for tagging");
    }
    const bool needs_cs = uses_commonsense(model.strategy);
    if (needs_cs && cache == nullptr) {
        throw IntegrityError(std::string("strategy ") + std::string(strategy_name(model.strategy)) +
                             " needs a commonsense cache");
    }
    std::vector<PreparedInstance> out;
    out.reserve(instances.size());
    for (const auto& source : instances) {
        const Instance* inst = &source;
        Instance tagged;
        if (model.restriction != LanguageRestriction::none) {
            tagged = source;
            for (auto& u : tagged.context) tag_utterance(u, *lexicons);
            tag_utterance(tagged.target, *lexicons);
            inst = &tagged;
        }
        PreparedInstance p;
        p.id = inst->id;
        p.label = inst->label;
        LayoutOptions layout_options;
        layout_options.restriction = model.restriction;
        if (needs_cs) {
            const auto text = select_attributes(cache->at(inst->id).result, model.attributes);
            if (model.strategy == FusionStrategy::concat) {
                layout_options.commonsense_prefix = text;
            } else {
                p.commonsense = layout_commonsense(text, model.vocab, model.encoder_config);
            }
        }
        p.layout = layout_instance(*inst, model.vocab, model.encoder_config, layout_options);
        out.push_back(std::move(p));
    }
    return out;
}

Tensor forward(const Model& model, const PreparedInstance& instance, const ForwardOptions& options,
               FusionOutput* telemetry) {
    const EncodeOptions encode{options.pad_to_max, options.dropout_rng};
    const auto rep = encode_layout(instance.layout, model.encoder, model.encoder_config, encode);
    Tensor d_cs;
    if (model.strategy == FusionStrategy::coffee || model.strategy == FusionStrategy::dpa) {
        if (!instance.commonsense) {
            throw IntegrityError("instance " + instance.id + " was prepared without commonsense");
        }
        const auto cs = encode_commonsense_layout(*instance.commonsense, model.encoder, model.encoder_config, encode);
        // Padding rows carry no commonsense; only real rows are fused.
        d_cs = cs.length == cs.d_cs.rows() ? cs.d_cs : slice_rows(cs.d_cs, 0, cs.length);
    }
    auto fused = fuse_detailed(model.strategy, rep.d_c, d_cs, model.fusion, rep.pad_mask);
    auto logits = classify(fused.fused, rep.target_begin, rep.target_end, model.head);
    if (telemetry) *telemetry = std::move(fused);
    return logits;
}

} // namespace coffee
