#include "coffee/data/labels.hpp"

#include "coffee/core/error.hpp"

namespace coffee {

std::size_t encode_label(std::string_view name) {
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        if (kEmotionNames[i] == name) {
            return i;
        }
    }
    throw LabelError("unknown emotion label '" + std::string(name) + "'");
}

std::string decode_label(std::size_t index) {
    if (index >= kEmotionCount) {
        throw LabelError("emotion index " + std::to_string(index) + " out of range [0, 8)");
    }
    return std::string(kEmotionNames[index]);
}

Emotion emotion_from_index(std::size_t index) {
    (void)decode_label(index);
    return static_cast<Emotion>(index);
}

} // namespace coffee
