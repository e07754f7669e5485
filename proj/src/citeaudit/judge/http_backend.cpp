#include <httplib.h>

#include <cstdlib>

#include "citeaudit/common/error.hpp"
#include "citeaudit/extract/url.hpp"
#include "citeaudit/judge/backend.hpp"

namespace citeaudit::judge {

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_minute) {
    key_ = config_.api_key;
    if (key_.empty() && !config_.api_key_env.empty()) {
        if (const char* v = std::getenv(config_.api_key_env.c_str())) key_ = v;
    }
}

nlohmann::json HttpBackend::request_body(const HttpBackendConfig& c, const BackendRequest& r) {
    return {{"model", c.model},
            {"temperature", c.temperature},
            {"max_tokens", c.max_tokens},
            {"messages",
             {{{"role", "system"}, {"content", r.system_prompt}}, {{"role", "user"}, {"content", r.user_prompt}}}},
            {"response_format", {{"type", "json_schema"}, {"json_schema", r.output_schema}}}};
}

std::string HttpBackend::complete(const BackendRequest& req) {
    if (key_.empty()) fail(ErrorCode::BackendUnavailable, "no API key in " + config_.api_key_env);
    const auto parts = extract::parse_url(config_.endpoint);
    std::string base = parts.scheme + "://" + parts.host;
    if (parts.port) base += ":" + std::to_string(*parts.port);
    std::string path = parts.path.empty() ? "/" : parts.path;
    if (parts.query) path += "?" + *parts.query;

    bucket_.acquire();
    httplib::Client cli(base);
    cli.set_connection_timeout(config_.timeout_seconds);
    cli.set_read_timeout(config_.timeout_seconds);
    cli.set_bearer_token_auth(key_);
    const auto body = request_body(config_, req).dump();
    auto res = cli.Post(path, body, "application/json");
    if (!res) fail(ErrorCode::BackendUnavailable, "transport error: " + httplib::to_string(res.error()));
    if (res->status != 200)
        fail(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));

    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) return res->body;
    try {
        const auto& msg = j.at("choices").at(0).at("message");
        if (msg.contains("content") && msg["content"].is_string()) return msg["content"].get<std::string>();
        return "";
    } catch (const nlohmann::json::exception&) {
        return res->body;
    }
}

}  // namespace citeaudit::judge
