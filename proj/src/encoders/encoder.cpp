#include "coffee/encoders/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "coffee/core/error.hpp"
#include "coffee/core/ops.hpp"
#include "coffee/data/text.hpp"

namespace coffee {

void EncoderConfig::validate() const {
    if (d == 0 || layers == 0 || heads == 0 || ffn_mult == 0) {
        throw ContractError("encoder config: d, layers, heads and ffn_mult must be positive");
    }
    if (d % heads != 0) {
        throw ContractError("encoder config: d=" + std::to_string(d) + " is not divisible by heads=" +
                            std::to_string(heads));
    }
    if (max_n < 3 || max_m < 1) {
        throw ContractError("encoder config: need max_n >= 3 and max_m >= 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ContractError("encoder config: dropout must lie in [0, 1)");
    }
}

nlohmann::json to_json(const EncoderConfig& cfg) {
    return {{"d", cfg.d},         {"layers", cfg.layers},   {"heads", cfg.heads},
            {"max_n", cfg.max_n}, {"max_m", cfg.max_m},     {"ffn_mult", cfg.ffn_mult},
            {"dropout", cfg.dropout}, {"seed", cfg.seed}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& doc) {
    EncoderConfig cfg;
    try {
        cfg.d = doc.at("d").get<std::size_t>();
        cfg.layers = doc.at("layers").get<std::size_t>();
        cfg.heads = doc.at("heads").get<std::size_t>();
        cfg.max_n = doc.at("max_n").get<std::size_t>();
        cfg.max_m = doc.at("max_m").get<std::size_t>();
        cfg.ffn_mult = doc.at("ffn_mult").get<std::size_t>();
        cfg.dropout = doc.at("dropout").get<double>();
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("encoder config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string_view restriction_name(LanguageRestriction r) {
    switch (r) {
    case LanguageRestriction::none: return "none";
    case LanguageRestriction::english_only: return "english-only";
    case LanguageRestriction::hindi_only: return "hindi-only";
    }
    return "none";
}

LanguageRestriction restriction_from_name(std::string_view name) {
    for (auto r : {LanguageRestriction::none, LanguageRestriction::english_only, LanguageRestriction::hindi_only}) {
        if (restriction_name(r) == name) return r;
    }
    throw ContractError("unknown language restriction '" + std::string(name) + "'");
}

namespace {

bool is_hindi(LanguageTag tag) {
    return tag == LanguageTag::hindi_roman || tag == LanguageTag::hindi_devanagari;
}

void append_segment(std::vector<std::size_t>& out, const Utterance& u, const Vocab& vocab,
                    LanguageRestriction restriction) {
    out.push_back(Vocab::kSpk);
    for (const auto& t : normalized_tokens(u.speaker)) out.push_back(vocab.id(t));
    const auto words = tokenize(u.text);
    if (restriction != LanguageRestriction::none) {
        if (!u.tokens || u.tokens->size() != words.size()) {
            throw ContractError("language restriction needs tagged tokens aligned with the text of '" +
                                u.text + "'");
        }
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        bool keep = true;
        if (restriction == LanguageRestriction::english_only) keep = !is_hindi((*u.tokens)[i].tag);
        if (restriction == LanguageRestriction::hindi_only) keep = (*u.tokens)[i].tag != LanguageTag::english;
        out.push_back(keep ? vocab.id(words[i]) : Vocab::kUnk);
    }
    out.push_back(Vocab::kSep);
}

} // namespace

TokenLayout layout_instance(const Instance& instance, const Vocab& vocab, const EncoderConfig& cfg,
                            const LayoutOptions& options) {
    cfg.validate();
    std::vector<std::size_t> prefix = {Vocab::kCls};
    if (options.commonsense_prefix) {
        const std::size_t cap = std::min(cfg.max_m, (cfg.max_n - 2) / 2);
        auto words = normalized_tokens(*options.commonsense_prefix);
        if (words.size() > cap) words.resize(cap);
        for (const auto& w : words) prefix.push_back(vocab.id(w));
        prefix.push_back(Vocab::kSep);
    }

    std::vector<std::size_t> body;
    for (const auto& u : instance.context) append_segment(body, u, vocab, options.restriction);
    const std::size_t target_start = body.size();
    append_segment(body, instance.target, vocab, options.restriction);

    TokenLayout layout;
    const std::size_t budget = cfg.max_n - prefix.size();
    std::size_t dropped = 0;
    if (body.size() > budget) {
        dropped = body.size() - budget;
        layout.truncated = true;
    }
    layout.ids = prefix;
    layout.ids.insert(layout.ids.end(), body.begin() + static_cast<std::ptrdiff_t>(dropped), body.end());
    layout.target_begin = prefix.size() + (target_start > dropped ? target_start - dropped : 0);
    layout.target_end = layout.ids.size();
    if (layout.ids.size() > cfg.max_n || layout.target_begin >= layout.target_end) {
        throw ContractError("layout_instance: invariant violated for instance " + instance.id);
    }
    return layout;
}

CommonsenseLayout layout_commonsense(std::string_view cs_text, const Vocab& vocab, const EncoderConfig& cfg) {
    cfg.validate();
    CommonsenseLayout layout;
    auto words = normalized_tokens(cs_text);
    if (words.size() > cfg.max_m) {
        words.resize(cfg.max_m);
        layout.truncated = true;
    }
    for (const auto& w : words) layout.ids.push_back(vocab.id(w));
    if (layout.ids.empty()) {
        layout.ids.push_back(Vocab::kUnk);
        layout.empty_input = true;
    }
    return layout;
}

namespace {

EncoderBlock init_block(const EncoderConfig& cfg, Rng& rng) {
    const std::size_t d = cfg.d, f = cfg.ffn_mult * cfg.d;
    EncoderBlock b;
    b.wq = xavier_uniform(d, d, rng);
    b.wk = xavier_uniform(d, d, rng);
    b.wv = xavier_uniform(d, d, rng);
    b.wo = xavier_uniform(d, d, rng);
    b.ln1_gamma = trainable_full(1, d, 1.0);
    b.ln1_beta = trainable_full(1, d, 0.0);
    b.w1 = xavier_uniform(d, f, rng);
    b.b1 = trainable_full(1, f, 0.0);
    b.w2 = xavier_uniform(f, d, rng);
    b.b2 = trainable_full(1, d, 0.0);
    b.ln2_gamma = trainable_full(1, d, 1.0);
    b.ln2_beta = trainable_full(1, d, 0.0);
    return b;
}

void add_block(ParameterList& out, const std::string& prefix, const EncoderBlock& b) {
    out.push_back({prefix + "wq", b.wq});
    out.push_back({prefix + "wk", b.wk});
    out.push_back({prefix + "wv", b.wv});
    out.push_back({prefix + "wo", b.wo});
    out.push_back({prefix + "ln1_gamma", b.ln1_gamma});
    out.push_back({prefix + "ln1_beta", b.ln1_beta});
    out.push_back({prefix + "w1", b.w1});
    out.push_back({prefix + "b1", b.b1});
    out.push_back({prefix + "w2", b.w2});
    out.push_back({prefix + "b2", b.b2});
    out.push_back({prefix + "ln2_gamma", b.ln2_gamma});
    out.push_back({prefix + "ln2_beta", b.ln2_beta});
}

Tensor maybe_dropout(const Tensor& x, const EncoderConfig& cfg, Rng* rng) {
    if (rng == nullptr || cfg.dropout == 0.0) return x;
    return dropout(x, cfg.dropout, *rng);
}

Tensor run_block(const Tensor& x, const EncoderBlock& b, const std::optional<Tensor>& mask_bias,
                 const EncoderConfig& cfg, Rng* rng) {
    const std::size_t dh = cfg.d / cfg.heads;
    const Tensor q = matmul(x, b.wq);
    const Tensor k = matmul(x, b.wk);
    const Tensor v = matmul(x, b.wv);
    std::vector<Tensor> heads;
    heads.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        const auto qh = slice_cols(q, h * dh, (h + 1) * dh);
        const auto kh = slice_cols(k, h * dh, (h + 1) * dh);
        const auto vh = slice_cols(v, h * dh, (h + 1) * dh);
        auto scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        if (mask_bias) scores = add_row(scores, *mask_bias);
        heads.push_back(matmul(softmax_rows(scores), vh));
    }
    const auto attended = matmul(cfg.heads == 1 ? heads.front() : concat_cols(heads), b.wo);
    const auto h1 = layer_norm_rows(add(x, maybe_dropout(attended, cfg, rng)), b.ln1_gamma, b.ln1_beta);
    const auto ff = add_row(matmul(gelu(add_row(matmul(h1, b.w1), b.b1)), b.w2), b.b2);
    return layer_norm_rows(add(h1, maybe_dropout(ff, cfg, rng)), b.ln2_gamma, b.ln2_beta);
}

// Encodes ids padded to `pad_to` rows; returns the full n x d output.
Tensor run_stack(const std::vector<std::size_t>& ids, std::size_t pad_to, const Tensor& embeddings,
                 const std::vector<EncoderBlock>& blocks, const EncoderConfig& cfg, Rng* rng,
                 std::vector<bool>& pad_mask) {
    const std::size_t n = std::max(ids.size(), pad_to);
    std::vector<std::size_t> full = ids;
    full.resize(n, Vocab::kPad);
    pad_mask.assign(n, false);
    std::optional<Tensor> mask_bias;
    if (n > ids.size()) {
        std::vector<double> bias(n, 0.0);
        for (std::size_t i = ids.size(); i < n; ++i) {
            bias[i] = -1e9;
            pad_mask[i] = true;
        }
        mask_bias = Tensor::from(Shape{1, n}, std::move(bias));
    }
    Tensor x = add(embedding_lookup(embeddings, full), positional_encoding(n, cfg.d));
    x = maybe_dropout(x, cfg, rng);
    for (const auto& b : blocks) x = run_block(x, b, mask_bias, cfg, rng);
    return x;
}

void check_params(const EncoderParams& params, const EncoderConfig& cfg) {
    cfg.validate();
    if (params.embeddings.cols() != cfg.d || params.dialogue.size() != cfg.layers ||
        params.commonsense.size() != cfg.layers) {
        throw DimensionError("encoder parameters do not match the encoder config");
    }
}

} // namespace

EncoderParams EncoderParams::init(std::size_t vocab_size, const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    p.embeddings = normal_init(vocab_size, cfg.d, 1.0, rng);
    for (std::size_t l = 0; l < cfg.layers; ++l) p.dialogue.push_back(init_block(cfg, rng));
    for (std::size_t l = 0; l < cfg.layers; ++l) p.commonsense.push_back(init_block(cfg, rng));
    return p;
}

ParameterList EncoderParams::parameters() const {
    ParameterList out;
    out.push_back({"embed", embeddings});
    for (std::size_t l = 0; l < dialogue.size(); ++l) add_block(out, "dlg." + std::to_string(l) + ".", dialogue[l]);
    for (std::size_t l = 0; l < commonsense.size(); ++l) add_block(out, "cs." + std::to_string(l) + ".", commonsense[l]);
    return out;
}

Tensor positional_encoding(std::size_t rows, std::size_t d) {
    std::vector<double> v(rows * d);
    for (std::size_t pos = 0; pos < rows; ++pos) {
        for (std::size_t i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
            const double angle = static_cast<double>(pos) / rate;
            v[pos * d + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from(Shape{rows, d}, std::move(v));
}

DialogueRep encode_layout(const TokenLayout& layout, const EncoderParams& params, const EncoderConfig& cfg,
                          const EncodeOptions& options) {
    check_params(params, cfg);
    if (layout.ids.empty() || layout.ids.size() > cfg.max_n) {
        throw ContractError("encode: layout of " + std::to_string(layout.ids.size()) +
                            " tokens does not fit max_n=" + std::to_string(cfg.max_n));
    }
    DialogueRep rep;
    rep.d_c = run_stack(layout.ids, options.pad_to_max ? cfg.max_n : 0, params.embeddings, params.dialogue, cfg,
                        options.dropout_rng, rep.pad_mask);
    rep.target_begin = layout.target_begin;
    rep.target_end = layout.target_end;
    rep.length = layout.ids.size();
    return rep;
}

DialogueRep encode_instance(const Instance& instance, const Vocab& vocab, const EncoderConfig& cfg,
                            const EncoderParams& params, const EncodeOptions& options,
                            const LayoutOptions& layout_options) {
    return encode_layout(layout_instance(instance, vocab, cfg, layout_options), params, cfg, options);
}

CommonsenseRep encode_commonsense_layout(const CommonsenseLayout& layout, const EncoderParams& params,
                                         const EncoderConfig& cfg, const EncodeOptions& options) {
    check_params(params, cfg);
    if (layout.ids.empty() || layout.ids.size() > cfg.max_m) {
        throw ContractError("encode: commonsense layout of " + std::to_string(layout.ids.size()) +
                            " tokens does not fit max_m=" + std::to_string(cfg.max_m));
    }
    CommonsenseRep rep;
    rep.d_cs = run_stack(layout.ids, options.pad_to_max ? cfg.max_m : 0, params.embeddings, params.commonsense,
                         cfg, options.dropout_rng, rep.pad_mask);
    rep.length = layout.ids.size();
    rep.empty_input = layout.empty_input;
    return rep;
}

CommonsenseRep encode_commonsense(std::string_view cs_text, const Vocab& vocab, const EncoderConfig& cfg,
                                  const EncoderParams& params, const EncodeOptions& options) {
    return encode_commonsense_layout(layout_commonsense(cs_text, vocab, cfg), params, cfg, options);
}

} // namespace coffee
