#pragma once

#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace citeaudit::crawl {

// robots.txt rules: group selection by product token (falling back to "*"),
// "*" and "$" patterns, longest match wins, Allow wins ties.
class RobotsTxt {
public:
    static RobotsTxt parse(std::string_view body);
    static RobotsTxt allow_all() { return {}; }

    // path includes the query string, e.g. "/a/b?x=1"
    bool allowed(std::string_view user_agent, std::string_view path) const;

private:
    struct Rule {
        bool allow;
        std::string pattern;
    };
    struct Group {
        std::vector<std::string> agents;  // lowercase
        std::vector<Rule> rules;
    };
    std::vector<Group> groups_;
};

bool robots_pattern_matches(std::string_view pattern, std::string_view path);

// Per-origin cache. The loader returns the robots body, or nullopt when the
// file is missing or unreachable, which allows everything.
class RobotsCache {
public:
    using Loader = std::function<std::optional<std::string>(const std::string& origin)>;

    explicit RobotsCache(Loader loader) : loader_(std::move(loader)) {}

    // Loads each origin at most once; concurrent callers wait for the first.
    bool allowed(const std::string& origin, std::string_view user_agent, std::string_view path);

    std::size_t fetches() const;

private:
    Loader loader_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::shared_future<RobotsTxt>> cache_;
};

}  // namespace citeaudit::crawl
