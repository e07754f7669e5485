#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citeaudit/judge/prompts.hpp"

namespace citeaudit::judge {

struct BackendRequest {
    JudgeTask task = JudgeTask::QI;
    std::string system_prompt;
    std::string user_prompt;
    nlohmann::json output_schema;
    int attempt = 1;  // 1-based
};

// Returns the raw structured text of one completion. Transport failures throw
// BackendUnavailable; content problems are left to parse_verdict.
class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual std::string complete(const BackendRequest& request) = 0;
    virtual std::string name() const = 0;
};

// sha256 over task, system and user prompt, separated by 0x1f.
std::string request_fingerprint(JudgeTask task, std::string_view system_prompt, std::string_view user_prompt);

struct MockRule {
    std::optional<JudgeTask> task;
    std::string fingerprint;          // exact match when non-empty
    std::string contains;             // substring of the user prompt when non-empty
    std::vector<std::string> responses;  // by attempt; the last one repeats
};

enum class MockFallback {
    Hash,         // label derived from the request fingerprint
    Garbage,      // non-JSON payload
    Unavailable,  // BackendUnavailable
};

// Deterministic stand-in for the judge. Output depends only on the request
// (fingerprint and attempt), never on call order.
class MockBackend final : public JudgeBackend {
public:
    explicit MockBackend(std::vector<MockRule> rules = {}, MockFallback fallback = MockFallback::Hash);

    // {"fallback": "hash"|"garbage"|"unavailable",
    //  "rules": [{"task": "QI", "fingerprint": .., "contains": .., "responses": [obj or string, ..]}]}
    static MockBackend from_json(const nlohmann::json& j);
    static MockBackend from_file(const std::filesystem::path& path);

    std::string complete(const BackendRequest& request) override;
    std::string name() const override { return "mock"; }

    std::uint64_t calls() const noexcept { return calls_.load(); }

private:
    std::vector<MockRule> rules_;
    MockFallback fallback_;
    std::atomic<std::uint64_t> calls_{0};
};

class TokenBucket {
public:
    // requests_per_minute <= 0 disables limiting.
    explicit TokenBucket(double requests_per_minute, double burst = 1.0);
    void acquire();

private:
    std::mutex mu_;
    double rate_per_s_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

struct HttpBackendConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o-mini-2024-07-18";
    double temperature = 0.0;
    int max_tokens = 4096;
    double requests_per_minute = 0.0;
    int timeout_seconds = 120;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string api_key;  // used as is when set; io::make_backend fills it from api_key_env first
};

// Chat-completion client with a strict json_schema response format.
class HttpBackend final : public JudgeBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    std::string complete(const BackendRequest& request) override;
    std::string name() const override { return config_.model; }

    static nlohmann::json request_body(const HttpBackendConfig& config, const BackendRequest& request);

private:
    HttpBackendConfig config_;
    std::string key_;
    TokenBucket bucket_;
};

}  // namespace citeaudit::judge
