#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coffee/data/corpus.hpp"
#include "coffee/extract/comet.hpp"
#include "coffee/extract/lexicons.hpp"

namespace coffee {

struct CacheEntry {
    std::string query;
    std::vector<std::string> topics;
    std::vector<std::string> untranslated;
    // All nine effect-types; every list empty when the instance had no topics.
    CommonsenseResult result;

    friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

// Commonsense cache keyed by instance id. File format:
//   {"format": "coffee-cs-cache-v1",
//    "instances": {"<id>": {"query": str, "topics": [str],
//                           "untranslated": [str], "result": {nine keys}}}}
struct CommonsenseCache {
    std::map<std::string, CacheEntry> instances;

    [[nodiscard]] bool contains(const std::string& id) const { return instances.contains(id); }
    // IntegrityError when the id is missing.
    [[nodiscard]] const CacheEntry& at(const std::string& id) const;
};

inline constexpr const char* kCacheFormat = "coffee-cs-cache-v1";

nlohmann::json cache_to_json(const CommonsenseCache& cache);
CommonsenseCache cache_from_json(const nlohmann::json& doc);
void save_cache(const std::filesystem::path& path, const CommonsenseCache& cache);
// A missing file yields an empty cache.
CommonsenseCache load_cache(const std::filesystem::path& path);

// Concatenated context and target text that commonsense is extracted from.
std::string extraction_text(const Instance& instance);

CommonsenseResult empty_result();

// Every pipeline stage for one instance as a JSON record: tagged tokens,
// transliterations, preprocessed topics, translated topic set and the COMET
// response (null when there are no topics).
nlohmann::json instance_trace(const Instance& instance, const Lexicons& lex, CometClient& client);

struct ExtractOptions {
    bool per_topic = false;
    std::size_t workers = 4;
};

struct ExtractSummary {
    std::size_t instances = 0;
    std::size_t reused = 0;
    std::size_t extracted = 0;
    std::size_t no_topics = 0;
};

// Fills the cache for every instance not already present. Instances already
// cached are left untouched, so re-running over the same corpus is a no-op.
ExtractSummary extract_corpus(const std::vector<Instance>& instances, const Lexicons& lex,
                              CometClient& client, CommonsenseCache& cache,
                              const ExtractOptions& options = {});

} // namespace coffee
