#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coffee/core/parameters.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/core/tensor.hpp"
#include "coffee/data/corpus.hpp"
#include "coffee/encoders/vocab.hpp"

namespace coffee {

struct EncoderConfig {
    std::size_t d = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t max_n = 96;
    std::size_t max_m = 64;
    // Feed-forward width is ffn_mult * d.
    std::size_t ffn_mult = 2;
    double dropout = 0.1;
    std::uint64_t seed = 13;

    // ContractError on d % heads != 0, zero sizes or dropout outside [0, 1).
    void validate() const;
};

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& doc);

// Which language-tagged tokens survive in the encoder input; the others are
// replaced by UNK. Speaker and structural tokens are never replaced.
enum class LanguageRestriction { none, english_only, hindi_only };

std::string_view restriction_name(LanguageRestriction r);
LanguageRestriction restriction_from_name(std::string_view name);

struct LayoutOptions {
    LanguageRestriction restriction = LanguageRestriction::none;
    // Commonsense text laid out as "[CLS] cs tokens [SEP]" ahead of the
    // dialogue, for the concat strategy. Capped at min(max_m, max_n / 2) tokens.
    std::optional<std::string> commonsense_prefix;
};

// Token ids for one instance:
//   [CLS] ([SPK] speaker tokens, utterance tokens, [SEP])* with the target last.
// When too long, the most recent tokens are kept after the leading [CLS] (and
// after the commonsense prefix, when present).
struct TokenLayout {
    std::vector<std::size_t> ids;
    // [target_begin, target_end) covers the target segment.
    std::size_t target_begin = 0;
    std::size_t target_end = 0;
    bool truncated = false;
};

// Language restriction needs Utterance::tokens on every utterance
// (ContractError otherwise); those tags must align with tokenize().
TokenLayout layout_instance(const Instance& instance, const Vocab& vocab, const EncoderConfig& cfg,
                            const LayoutOptions& options = {});

// Commonsense ids: first max_m tokens; empty text becomes a single [UNK].
struct CommonsenseLayout {
    std::vector<std::size_t> ids;
    bool empty_input = false;
    bool truncated = false;
};

CommonsenseLayout layout_commonsense(std::string_view cs_text, const Vocab& vocab, const EncoderConfig& cfg);

struct EncoderBlock {
    Tensor wq, wk, wv, wo;
    Tensor ln1_gamma, ln1_beta;
    Tensor w1, b1, w2, b2;
    Tensor ln2_gamma, ln2_beta;
};

// Shared token embeddings plus separate block stacks for dialogue and
// commonsense text.
struct EncoderParams {
    Tensor embeddings; // V x d
    std::vector<EncoderBlock> dialogue;
    std::vector<EncoderBlock> commonsense;

    static EncoderParams init(std::size_t vocab_size, const EncoderConfig& cfg, Rng& rng);
    // Stable names: "embed", "dlg.<layer>.<name>", "cs.<layer>.<name>".
    [[nodiscard]] ParameterList parameters() const;
};

struct EncodeOptions {
    // Pad to max_n / max_m with [PAD]; otherwise encode at the exact length.
    // Padded keys are masked, so unpadded rows agree either way.
    bool pad_to_max = true;
    // Dropout is applied only when an Rng is supplied.
    Rng* dropout_rng = nullptr;
};

struct DialogueRep {
    Tensor d_c; // n x d
    std::size_t target_begin = 0;
    std::size_t target_end = 0;
    // true marks a padding position.
    std::vector<bool> pad_mask;
    std::size_t length = 0;
};

struct CommonsenseRep {
    Tensor d_cs; // m x d
    std::vector<bool> pad_mask;
    std::size_t length = 0;
    bool empty_input = false;
};

// Sinusoidal position table, rows x d.
Tensor positional_encoding(std::size_t rows, std::size_t d);

DialogueRep encode_layout(const TokenLayout& layout, const EncoderParams& params, const EncoderConfig& cfg,
                          const EncodeOptions& options = {});
DialogueRep encode_instance(const Instance& instance, const Vocab& vocab, const EncoderConfig& cfg,
                            const EncoderParams& params, const EncodeOptions& options = {},
                            const LayoutOptions& layout_options = {});

CommonsenseRep encode_commonsense_layout(const CommonsenseLayout& layout, const EncoderParams& params,
                                         const EncoderConfig& cfg, const EncodeOptions& options = {});
CommonsenseRep encode_commonsense(std::string_view cs_text, const Vocab& vocab, const EncoderConfig& cfg,
                                  const EncoderParams& params, const EncodeOptions& options = {});

} // namespace coffee
