#include "citeaudit/judge/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/hash.hpp"

namespace citeaudit::judge {

std::string request_fingerprint(JudgeTask task, std::string_view system_prompt, std::string_view user_prompt) {
    std::string buf(to_string(task));
    buf += '\x1f';
    buf += system_prompt;
    buf += '\x1f';
    buf += user_prompt;
    return sha256_hex(buf);
}

MockBackend::MockBackend(std::vector<MockRule> rules, MockFallback fallback)
    : rules_(std::move(rules)), fallback_(fallback) {}

MockBackend MockBackend::from_json(const nlohmann::json& j) {
    try {
        MockFallback fb = MockFallback::Hash;
        const auto f = j.value("fallback", std::string("hash"));
        if (f == "garbage") fb = MockFallback::Garbage;
        else if (f == "unavailable") fb = MockFallback::Unavailable;
        else if (f != "hash") fail(ErrorCode::ConfigInvalid, "unknown mock fallback " + f);

        std::vector<MockRule> rules;
        for (const auto& r : j.value("rules", nlohmann::json::array())) {
            MockRule rule;
            if (r.contains("task")) {
                rule.task = parse_task(r.at("task").get<std::string>());
                if (!rule.task) fail(ErrorCode::ConfigInvalid, "unknown task in mock rule");
            }
            rule.fingerprint = r.value("fingerprint", "");
            rule.contains = r.value("contains", "");
            for (const auto& resp : r.at("responses"))
                rule.responses.push_back(resp.is_string() ? resp.get<std::string>() : resp.dump());
            if (rule.responses.empty()) fail(ErrorCode::ConfigInvalid, "mock rule without responses");
            rules.push_back(std::move(rule));
        }
        return MockBackend(std::move(rules), fb);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("mock rules: ") + e.what());
    }
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::ConfigInvalid, "mock rules are not valid JSON: " + path.string());
    return from_json(j);
}

std::string MockBackend::complete(const BackendRequest& req) {
    ++calls_;
    const auto fp = request_fingerprint(req.task, req.system_prompt, req.user_prompt);
    for (const auto& rule : rules_) {
        if (rule.task && *rule.task != req.task) continue;
        if (!rule.fingerprint.empty() && rule.fingerprint != fp) continue;
        if (!rule.contains.empty() && req.user_prompt.find(rule.contains) == std::string::npos) continue;
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(req.attempt, 1)) - 1,
                                             rule.responses.size() - 1);
        return rule.responses[i];
    }
    switch (fallback_) {
        case MockFallback::Garbage: return "not json";
        case MockFallback::Unavailable: fail(ErrorCode::BackendUnavailable, "mock backend has no rule");
        case MockFallback::Hash: break;
    }
    const auto h = std::stoull(fp.substr(0, 12), nullptr, 16);
    const int label = 1 + static_cast<int>(h % label_count(req.task));
    return nlohmann::json{{std::string(reasoning_field(req.task)), "mock " + fp.substr(0, 12)},
                          {std::string(label_field(req.task)), label_code(req.task, label)}}
        .dump();
}

TokenBucket::TokenBucket(double rpm, double burst)
    : rate_per_s_(rpm > 0 ? rpm / 60.0 : 0.0),
      capacity_(std::max(burst, 1.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_per_s_ <= 0) return;
    for (;;) {
        std::chrono::duration<double> wait{};
        {
            std::lock_guard lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(capacity_,
                               tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_s_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_s_);
        }
        std::this_thread::sleep_for(wait);
    }
}

}  // namespace citeaudit::judge
