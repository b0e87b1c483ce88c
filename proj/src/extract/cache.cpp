#include "coffee/extract/cache.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <optional>
#include <thread>

#include "coffee/core/error.hpp"
#include "coffee/extract/pipeline.hpp"

namespace coffee {

const CacheEntry& CommonsenseCache::at(const std::string& id) const {
    auto it = instances.find(id);
    if (it == instances.end()) {
        throw IntegrityError("no commonsense cached for instance '" + id + "'");
    }
    return it->second;
}

nlohmann::json cache_to_json(const CommonsenseCache& cache) {
    nlohmann::json items = nlohmann::json::object();
    for (const auto& [id, entry] : cache.instances) {
        items[id] = {{"query", entry.query},
                     {"topics", entry.topics},
                     {"untranslated", entry.untranslated},
                     {"result", to_json(entry.result)}};
    }
    return {{"format", kCacheFormat}, {"instances", items}};
}

namespace {

CommonsenseResult result_from_json(const nlohmann::json& body) {
    CommonsenseResult result;
    if (!body.is_object() || body.size() != kEffectTypes.size()) {
        throw ParseError("cached result must hold the nine effect-types");
    }
    for (auto effect : kEffectTypes) {
        auto it = body.find(std::string(effect));
        if (it == body.end() || !it->is_array()) {
            throw ParseError("cached result lacks effect-type '" + std::string(effect) + "'");
        }
        result.effects[std::string(effect)] = it->get<std::vector<std::string>>();
    }
    return result;
}

} // namespace

CommonsenseCache cache_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != kCacheFormat) {
        throw ParseError(std::string("commonsense cache must declare format ") + kCacheFormat);
    }
    CommonsenseCache cache;
    try {
        for (const auto& [id, item] : doc.at("instances").items()) {
            CacheEntry entry;
            entry.query = item.at("query").get<std::string>();
            entry.topics = item.at("topics").get<std::vector<std::string>>();
            entry.untranslated = item.value("untranslated", std::vector<std::string>{});
            entry.result = result_from_json(item.at("result"));
            cache.instances.emplace(id, std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed commonsense cache: ") + e.what());
    }
    return cache;
}

void save_cache(const std::filesystem::path& path, const CommonsenseCache& cache) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write commonsense cache " + path.string());
    }
    out << cache_to_json(cache).dump(1) << '\n';
}

CommonsenseCache load_cache(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open commonsense cache " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("commonsense cache " + path.string() + ": " + e.what());
    }
    return cache_from_json(doc);
}

std::string extraction_text(const Instance& instance) {
    std::string text;
    for (const auto& u : instance.context) {
        text += u.text;
        text += ' ';
    }
    text += instance.target.text;
    return text;
}

nlohmann::json instance_trace(const Instance& instance, const Lexicons& lex, CometClient& client) {
    const auto text = extraction_text(instance);
    const auto trace = extract_topics(text, lex);
    auto tokens = [](const std::vector<LanguageTaggedToken>& list) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& t : list) {
            nlohmann::json tok = {{"surface", t.surface}, {"tag", tag_name(t.tag)}};
            if (!t.origin.empty()) tok["origin"] = t.origin;
            if (t.passthrough) tok["passthrough"] = true;
            out.push_back(std::move(tok));
        }
        return out;
    };
    nlohmann::json record = {{"id", instance.id},
                             {"text", text},
                             {"tagged", tokens(trace.tagged)},
                             {"transliterated", tokens(trace.transliterated)},
                             {"preprocessed", tokens(trace.preprocessed)},
                             {"topics", trace.topics.topics},
                             {"untranslated", trace.topics.untranslated},
                             {"query", trace.topics.query()}};
    record["comet"] = trace.topics.topics.empty() ? nlohmann::json(nullptr)
                                                  : to_json(query_comet(trace.topics, client));
    return record;
}

CommonsenseResult empty_result() {
    CommonsenseResult result;
    for (auto effect : kEffectTypes) result.effects[std::string(effect)];
    return result;
}

ExtractSummary extract_corpus(const std::vector<Instance>& instances, const Lexicons& lex,
                              CometClient& client, CommonsenseCache& cache,
                              const ExtractOptions& options) {
    ExtractSummary summary;
    summary.instances = instances.size();
    std::vector<const Instance*> todo;
    for (const auto& inst : instances) {
        if (cache.contains(inst.id)) {
            ++summary.reused;
        } else {
            todo.push_back(&inst);
        }
    }

    std::vector<std::optional<CacheEntry>> results(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            try {
                const auto trace = extract_topics(extraction_text(*todo[i]), lex);
                CacheEntry entry;
                entry.topics = trace.topics.topics;
                entry.untranslated = trace.topics.untranslated;
                entry.query = trace.topics.query();
                if (entry.topics.empty()) {
                    entry.result = empty_result();
                } else {
                    entry.result = options.per_topic ? query_comet_per_topic(trace.topics, client)
                                                     : query_comet(trace.topics, client);
                }
                results[i] = std::move(entry);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, todo.size()));
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();

    // Completed entries are kept even when another instance failed, so a
    // retry only redoes the failures.
    std::exception_ptr first_error;
    for (std::size_t i = 0; i < todo.size(); ++i) {
        if (results[i]) {
            if (results[i]->topics.empty()) ++summary.no_topics;
            cache.instances.emplace(todo[i]->id, std::move(*results[i]));
            ++summary.extracted;
        } else if (!first_error) {
            first_error = errors[i];
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return summary;
}

} // namespace coffee
