#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coffee/core/parameters.hpp"
#include "coffee/core/rng.hpp"
#include "coffee/core/tensor.hpp"
#include "coffee/data/corpus.hpp"
#include "coffee/encoders/encoder.hpp"
#include "coffee/encoders/vocab.hpp"
#include "coffee/extract/cache.hpp"
#include "coffee/extract/lexicons.hpp"
#include "coffee/fusion/fusion.hpp"

namespace coffee {

struct ClassifierParams {
    Tensor head_w; // d x 8
    Tensor head_b; // 1 x 8

    static ClassifierParams init(std::size_t d, Rng& rng);
    [[nodiscard]] ParameterList parameters() const;
};

// Mean of fused rows [begin, end), then an affine map to 8 logits.
// ContractError on an empty or out-of-range span.
Tensor classify(const Tensor& fused, std::size_t begin, std::size_t end, const ClassifierParams& params);

// -log softmax(logits)[gold]. LabelError when gold is outside [0, 8).
Tensor cross_entropy(const Tensor& logits, std::size_t gold);

struct Model {
    EncoderConfig encoder_config;
    Vocab vocab;
    FusionStrategy strategy = FusionStrategy::coffee;
    std::vector<std::string> attributes;
    LanguageRestriction restriction = LanguageRestriction::none;
    std::size_t context_window = kDefaultContextWindow;
    EncoderParams encoder;
    FusionParams fusion;
    ClassifierParams head;

    static Model init(Vocab vocab, const EncoderConfig& cfg, FusionStrategy strategy,
                      std::vector<std::string> attributes, LanguageRestriction restriction,
                      std::size_t context_window, std::uint64_t seed);

    // Every parameter, in checkpoint order.
    [[nodiscard]] ParameterList parameters() const;
    // Only the parameters the strategy's forward pass touches.
    [[nodiscard]] ParameterList trainable_parameters() const;
    [[nodiscard]] nlohmann::json meta() const;
};

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// Encoder-ready form of one instance.
struct PreparedInstance {
    std::string id;
    std::size_t label = 0;
    TokenLayout layout;
    // Present for strategies that encode commonsense separately.
    std::optional<CommonsenseLayout> commonsense;
};

// IntegrityError when the strategy needs commonsense and the cache lacks an
// instance; ContractError when a language restriction is set without lexicons.
std::vector<PreparedInstance> prepare_instances(const Model& model, const std::vector<Instance>& instances,
                                                const CommonsenseCache* cache, const Lexicons* lexicons);

struct ForwardOptions {
    Rng* dropout_rng = nullptr;
    // Encode padded to max_n / max_m rather than at the exact length.
    bool pad_to_max = false;
};

// Logits 1 x 8. When telemetry is given it receives the fusion output.
Tensor forward(const Model& model, const PreparedInstance& instance, const ForwardOptions& options = {},
               FusionOutput* telemetry = nullptr);

} // namespace coffee
