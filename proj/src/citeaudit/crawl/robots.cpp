#include "citeaudit/crawl/robots.hpp"

#include <cctype>

#include "citeaudit/common/text.hpp"

namespace citeaudit::crawl {

namespace {

std::string product_token(std::string_view ua) {
    std::size_t end = 0;
    while (end < ua.size() && (std::isalnum(static_cast<unsigned char>(ua[end])) || ua[end] == '-' || ua[end] == '_'))
        ++end;
    return text::to_lower(ua.substr(0, end));
}

}  // namespace

bool robots_pattern_matches(std::string_view pattern, std::string_view path) {
    bool anchored = !pattern.empty() && pattern.back() == '$';
    if (anchored) pattern.remove_suffix(1);
    // Greedy-with-backtracking wildcard match; "*" matches any run.
    std::size_t p = 0, s = 0, star = std::string_view::npos, mark = 0;
    while (s < path.size()) {
        if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = s;
        } else if (p < pattern.size() && pattern[p] == path[s]) {
            ++p;
            ++s;
        } else if (p == pattern.size() && !anchored) {
            return true;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            s = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

RobotsTxt RobotsTxt::parse(std::string_view body) {
    RobotsTxt out;
    bool last_was_agent = false;
    for (auto raw : text::split(body, '\n')) {
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        const auto key = text::to_lower(text::trim(line.substr(0, colon)));
        const auto value = std::string(text::trim(line.substr(colon + 1)));
        if (key == "user-agent") {
            if (!last_was_agent || out.groups_.empty()) out.groups_.emplace_back();
            out.groups_.back().agents.push_back(text::to_lower(value));
            last_was_agent = true;
        } else if (key == "allow" || key == "disallow") {
            last_was_agent = false;
            if (out.groups_.empty() || value.empty()) continue;
            out.groups_.back().rules.push_back({key == "allow", value});
        } else {
            last_was_agent = false;
        }
    }
    return out;
}

bool RobotsTxt::allowed(std::string_view user_agent, std::string_view path) const {
    if (path == "/robots.txt") return true;
    const auto token = product_token(user_agent);
    std::vector<const Rule*> rules;
    for (const auto& g : groups_)
        for (const auto& a : g.agents)
            if (!token.empty() && a == token) {
                for (const auto& r : g.rules) rules.push_back(&r);
                break;
            }
    if (rules.empty()) {
        for (const auto& g : groups_)
            for (const auto& a : g.agents)
                if (a == "*") {
                    for (const auto& r : g.rules) rules.push_back(&r);
                    break;
                }
    }
    const Rule* best = nullptr;
    for (const auto* r : rules) {
        if (!robots_pattern_matches(r->pattern, path)) continue;
        if (!best || r->pattern.size() > best->pattern.size() ||
            (r->pattern.size() == best->pattern.size() && r->allow && !best->allow))
            best = r;
    }
    return !best || best->allow;
}

bool RobotsCache::allowed(const std::string& origin, std::string_view user_agent, std::string_view path) {
    std::shared_future<RobotsTxt> fut;
    std::promise<RobotsTxt> promise;
    bool owner = false;
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(origin);
        if (it == cache_.end()) {
            fut = promise.get_future().share();
            cache_.emplace(origin, fut);
            owner = true;
        } else {
            fut = it->second;
        }
    }
    if (owner) {
        RobotsTxt parsed;
        try {
            if (auto body = loader_(origin)) parsed = RobotsTxt::parse(*body);
        } catch (...) {
            parsed = RobotsTxt::allow_all();
        }
        promise.set_value(std::move(parsed));
    }
    return fut.get().allowed(user_agent, path);
}

std::size_t RobotsCache::fetches() const {
    std::lock_guard lock(mu_);
    return cache_.size();
}

}  // namespace citeaudit::crawl
