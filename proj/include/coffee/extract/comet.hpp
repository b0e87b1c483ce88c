#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "coffee/extract/pipeline.hpp"

namespace coffee {

// The nine COMET effect-types, in reporting order.
inline constexpr std::array<std::string_view, 9> kEffectTypes = {
    "oEffect", "oReact", "oWant", "xAttr", "xEffect", "xIntent", "xNeed", "xReact", "xWant"};

bool is_effect_type(std::string_view name);

struct CommonsenseResult {
    // Exactly the nine effect-types as keys.
    std::map<std::string, std::vector<std::string>> effects;

    [[nodiscard]] const std::vector<std::string>& at(std::string_view effect) const;
    friend bool operator==(const CommonsenseResult&, const CommonsenseResult&) = default;
};

// Wire response: {"oEffect": [str], ..., "xWant": [str]}, exactly nine keys,
// nonempty phrases. ProtocolError otherwise.
CommonsenseResult parse_comet_response(const nlohmann::json& body);
nlohmann::json to_json(const CommonsenseResult& result);

// Transport behind the client. fetch() returns the raw response body for one
// query or throws ServiceError.
class CometBackend {
  public:
    virtual ~CometBackend() = default;
    virtual std::string fetch(const std::string& query) = 0;
    [[nodiscard]] virtual bool is_network() const = 0;
};

// Replays a fixture store: a JSON object mapping query string to a response
// object in the wire schema. Never touches the network.
class FixtureCometBackend final : public CometBackend {
  public:
    explicit FixtureCometBackend(nlohmann::json store);
    static std::unique_ptr<FixtureCometBackend> from_file(const std::filesystem::path& path);

    std::string fetch(const std::string& query) override;
    [[nodiscard]] bool is_network() const override { return false; }

  private:
    nlohmann::json store_;
};

struct HttpCometConfig {
    std::string url; // http://host[:port][/path]
    std::chrono::milliseconds timeout{5000};
    int max_attempts = 3;
    std::chrono::milliseconds backoff{100};
};

// POST {"query": str} as JSON; retries transport failures and 5xx/429 with
// linear backoff, then raises ServiceError carrying the attempt count.
class HttpCometBackend final : public CometBackend {
  public:
    explicit HttpCometBackend(HttpCometConfig config);

    std::string fetch(const std::string& query) override;
    [[nodiscard]] bool is_network() const override { return true; }

  private:
    HttpCometConfig config_;
    std::string origin_;
    std::string path_;
};

// Thread-safe caching front end. Concurrent callers share a single in-flight
// request per distinct query string; at most max_in_flight backend calls run
// at once.
class CometClient {
  public:
    explicit CometClient(std::unique_ptr<CometBackend> backend, std::size_t max_in_flight = 4);

    CommonsenseResult query(const std::string& query_string);

    [[nodiscard]] std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
    [[nodiscard]] std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
    [[nodiscard]] bool uses_network() const { return backend_->is_network(); }

    // Successful responses seen so far, in fixture-store format.
    [[nodiscard]] nlohmann::json export_fixtures() const;

  private:
    std::unique_ptr<CometBackend> backend_;
    std::counting_semaphore<256> slots_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::shared_future<CommonsenseResult>> cache_;
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

// Stage 5: all topics joined into one query. EmptyInputError on no topics.
CommonsenseResult query_comet(const TopicSet& topics, CometClient& client);

// Ablation mode: one query per topic, phrases merged per effect-type with
// duplicates removed.
CommonsenseResult query_comet_per_topic(const TopicSet& topics, CometClient& client);

// Picks a backend from a --comet argument: http:// URLs go to the network,
// anything else is read as a fixture store path.
std::unique_ptr<CometBackend> make_comet_backend(const std::string& target);

} // namespace coffee
