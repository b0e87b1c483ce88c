#include "coffee/extract/comet.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>

#include "coffee/core/error.hpp"

namespace coffee {

bool is_effect_type(std::string_view name) {
    return std::find(kEffectTypes.begin(), kEffectTypes.end(), name) != kEffectTypes.end();
}

const std::vector<std::string>& CommonsenseResult::at(std::string_view effect) const {
    auto it = effects.find(std::string(effect));
    if (it == effects.end()) {
        throw SelectionError("unknown effect-type '" + std::string(effect) + "'");
    }
    return it->second;
}

CommonsenseResult parse_comet_response(const nlohmann::json& body) {
    if (!body.is_object()) {
        throw ProtocolError("COMET response must be a JSON object");
    }
    if (body.size() != kEffectTypes.size()) {
        throw ProtocolError("COMET response has " + std::to_string(body.size()) +
                            " keys, expected exactly 9 effect-types");
    }
    CommonsenseResult result;
    for (auto effect : kEffectTypes) {
        auto it = body.find(std::string(effect));
        if (it == body.end()) {
            throw ProtocolError("COMET response lacks effect-type '" + std::string(effect) + "'");
        }
        if (!it->is_array()) {
            throw ProtocolError("COMET effect-type '" + std::string(effect) + "' must be an array");
        }
        std::vector<std::string> phrases;
        for (const auto& p : *it) {
            if (!p.is_string() || p.get<std::string>().empty()) {
                throw ProtocolError("COMET effect-type '" + std::string(effect) +
                                    "' holds an empty or non-string phrase");
            }
            phrases.push_back(p.get<std::string>());
        }
        result.effects.emplace(effect, std::move(phrases));
    }
    return result;
}

nlohmann::json to_json(const CommonsenseResult& result) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [effect, phrases] : result.effects) out[effect] = phrases;
    return out;
}

FixtureCometBackend::FixtureCometBackend(nlohmann::json store) : store_(std::move(store)) {
    if (!store_.is_object()) {
        throw ParseError("COMET fixture store must be a JSON object");
    }
}

std::unique_ptr<FixtureCometBackend> FixtureCometBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open COMET fixture store " + path.string());
    }
    nlohmann::json store;
    try {
        in >> store;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("COMET fixture store " + path.string() + ": " + e.what());
    }
    return std::make_unique<FixtureCometBackend>(std::move(store));
}

std::string FixtureCometBackend::fetch(const std::string& query) {
    auto it = store_.find(query);
    if (it == store_.end()) {
        throw ServiceError("no COMET fixture for query '" + query + "'", 1);
    }
    return it->dump();
}

HttpCometBackend::HttpCometBackend(HttpCometConfig config) : config_(std::move(config)) {
    static const std::regex url_re(R"(^(http)://([^/:]+)(:[0-9]+)?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.url, m, url_re)) {
        throw ContractError("COMET endpoint must be an http:// URL, got '" + config_.url + "'");
    }
    origin_ = m[1].str() + "://" + m[2].str() + m[3].str();
    path_ = m[4].matched ? m[4].str() : "/";
    if (config_.max_attempts < 1) {
        throw ContractError("COMET client needs at least one attempt");
    }
}

std::string HttpCometBackend::fetch(const std::string& query) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    const std::string body = nlohmann::json{{"query", query}}.dump();

    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        auto res = client.Post(path_, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            return res->body;
        }
        if (res) {
            last_error = "HTTP status " + std::to_string(res->status);
            const bool retryable = res->status >= 500 || res->status == 429;
            if (!retryable) {
                throw ServiceError("COMET endpoint " + config_.url + " rejected query: " + last_error,
                                   attempt);
            }
        } else {
            last_error = httplib::to_string(res.error());
        }
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(config_.backoff * attempt);
        }
    }
    throw ServiceError("COMET endpoint " + config_.url + " unavailable after " +
                           std::to_string(config_.max_attempts) + " attempts: " + last_error,
                       config_.max_attempts);
}

CometClient::CometClient(std::unique_ptr<CometBackend> backend, std::size_t max_in_flight)
    : backend_(std::move(backend)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(max_in_flight, 1, 256))) {
    if (!backend_) {
        throw ContractError("CometClient needs a backend");
    }
}

CommonsenseResult CometClient::query(const std::string& query_string) {
    std::promise<CommonsenseResult> promise;
    std::shared_future<CommonsenseResult> future;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(query_string);
        if (it != cache_.end()) {
            future = it->second;
            ++cache_hits_;
        } else {
            future = promise.get_future().share();
            cache_.emplace(query_string, future);
            owner = true;
        }
    }
    if (owner) {
        try {
            std::string body;
            {
                slots_.acquire();
                struct Release {
                    std::counting_semaphore<256>& s;
                    ~Release() { s.release(); }
                } release{slots_};
                ++backend_calls_;
                body = backend_->fetch(query_string);
            }
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(body);
            } catch (const nlohmann::json::parse_error& e) {
                throw ProtocolError(std::string("COMET response is not JSON: ") + e.what());
            }
            promise.set_value(parse_comet_response(doc));
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mutex_);
            cache_.erase(query_string);
        }
    }
    return future.get();
}

nlohmann::json CometClient::export_fixtures() const {
    std::lock_guard lock(mutex_);
    nlohmann::json store = nlohmann::json::object();
    for (const auto& [query, future] : cache_) {
        if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) continue;
        try {
            store[query] = to_json(future.get());
        } catch (const Error&) {
        }
    }
    return store;
}

CommonsenseResult query_comet(const TopicSet& topics, CometClient& client) {
    if (topics.topics.empty()) {
        throw EmptyInputError("query_comet: topic set is empty");
    }
    return client.query(topics.query());
}

CommonsenseResult query_comet_per_topic(const TopicSet& topics, CometClient& client) {
    if (topics.topics.empty()) {
        throw EmptyInputError("query_comet: topic set is empty");
    }
    CommonsenseResult merged;
    std::map<std::string, std::set<std::string>> seen;
    for (auto effect : kEffectTypes) merged.effects[std::string(effect)];
    for (const auto& topic : topics.topics) {
        const auto part = client.query(topic);
        for (const auto& [effect, phrases] : part.effects) {
            for (const auto& p : phrases) {
                if (seen[effect].insert(p).second) merged.effects[effect].push_back(p);
            }
        }
    }
    return merged;
}

std::unique_ptr<CometBackend> make_comet_backend(const std::string& target) {
    if (target.starts_with("http://") || target.starts_with("https://")) {
        return std::make_unique<HttpCometBackend>(HttpCometConfig{.url = target});
    }
    return FixtureCometBackend::from_file(target);
}

} // namespace coffee
