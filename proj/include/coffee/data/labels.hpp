#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace coffee {

// The closed emotion label set; index order is the column order of the
// reported per-class tables.
enum class Emotion : std::size_t {
    anger = 0,
    contempt = 1,
    disgust = 2,
    fear = 3,
    joy = 4,
    neutral = 5,
    sadness = 6,
    surprise = 7,
};

inline constexpr std::size_t kEmotionCount = 8;

inline constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "anger", "contempt", "disgust", "fear", "joy", "neutral", "sadness", "surprise"};

// Codec between label names and indices. Both directions throw LabelError
// outside the domain.
std::size_t encode_label(std::string_view name);
std::string decode_label(std::size_t index);

inline std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }
Emotion emotion_from_index(std::size_t index);

} // namespace coffee
