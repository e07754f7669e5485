#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "citeaudit/crawl/robots.hpp"
#include "citeaudit/crawl/tiers.hpp"

namespace citeaudit::crawl {

enum class FailureCategory { BotBlockOrJs, FileFormat, EmptyResponse, ServerError, Timeout, Other, DnsOrExpired };

inline constexpr std::array<FailureCategory, 7> kAllFailureCategories = {
    FailureCategory::BotBlockOrJs, FailureCategory::FileFormat, FailureCategory::EmptyResponse,
    FailureCategory::ServerError,  FailureCategory::Timeout,    FailureCategory::Other,
    FailureCategory::DnsOrExpired};

std::string_view to_string(FailureCategory c) noexcept;
std::optional<FailureCategory> parse_failure_category(std::string_view s) noexcept;

std::vector<std::string> default_bot_block_signatures();  // 16 entries
std::vector<std::string> default_login_signatures();
std::vector<std::string> default_parked_signatures();

struct CrawlConfig {
    double redirect_timeout = 10.0;  // seconds, whole redirect chain
    double fetch_timeout = 15.0;     // seconds, terminal page
    unsigned global_concurrency = 5;
    std::size_t content_cap = 50000;       // scalar values of extracted text
    std::size_t min_content_length = 50;   // scalar values
    double per_domain_delay = 2.0;         // seconds between requests to one registrable domain
    std::vector<std::string> bot_block_signatures = default_bot_block_signatures();
    std::vector<std::string> login_signatures = default_login_signatures();
    std::vector<std::string> parked_signatures = default_parked_signatures();
    std::string user_agent = "citeaudit-crawler/1.0";
    bool respect_robots = true;
    bool render = true;
    int max_redirects = 10;
    std::size_t max_body_bytes = 8u << 20;
    double menu_link_density = 0.7;
    // hostname -> "ip:port"; requests keep the original Host header.
    std::map<std::string, std::string> host_overrides;

    void validate() const;  // ConfigInvalid
};

nlohmann::json to_json(const CrawlConfig& c);
// Keys absent from j keep their defaults.
CrawlConfig crawl_config_from_json(const nlohmann::json& j);

enum class CrawlStatus { Success, Failed };

struct CrawlOutcome {
    std::string url_id;
    std::string url;
    std::string final_url;
    CrawlStatus status = CrawlStatus::Failed;
    std::optional<FailureCategory> failure;
    std::string failure_detail;
    int http_status = 0;
    std::string content;
    std::size_t content_length = 0;
    bool truncated = false;
    std::string fetched_at;
    bool phantom = false;
    HostTier tier = HostTier::CommercialOther;
    std::string extraction_method;
    int redirects = 0;
};

nlohmann::json to_json(const CrawlOutcome& o);
CrawlOutcome outcome_from_json(const nlohmann::json& j);

// A classified crawl failure; thrown by resolve_redirects.
class CrawlFailure : public std::runtime_error {
public:
    CrawlFailure(FailureCategory c, std::string detail, bool phantom = false)
        : std::runtime_error(std::string(to_string(c)) + ": " + detail), category(c), phantom(phantom) {}
    FailureCategory category;
    bool phantom;
};

struct RawPage {
    int status = 0;
    std::string content_type;
    std::string body;
    std::string final_url;
};

// Optional first retrieval stage (headless rendering). None ships with the
// library; without one the crawler uses plain retrieval only.
class PageRenderer {
public:
    virtual ~PageRenderer() = default;
    virtual std::optional<RawPage> render(const std::string& url, double timeout_seconds) = 0;
};

// Serialises requests per registrable domain: one in flight, and the next
// starts no earlier than `delay` after the previous one finished.
class DomainGate {
public:
    explicit DomainGate(double delay_seconds) : delay_(delay_seconds) {}

    class Ticket {
    public:
        Ticket(DomainGate* g, std::string d) : gate_(g), domain_(std::move(d)) {}
        Ticket(Ticket&& o) noexcept : gate_(o.gate_), domain_(std::move(o.domain_)) { o.gate_ = nullptr; }
        Ticket(const Ticket&) = delete;
        ~Ticket();

    private:
        DomainGate* gate_;
        std::string domain_;
    };

    Ticket acquire(const std::string& domain);

private:
    struct Slot {
        bool busy = false;
        std::optional<std::chrono::steady_clock::time_point> last_done;
    };
    void release(const std::string& domain);

    double delay_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::unordered_map<std::string, Slot> slots_;
};

struct TierCounts {
    std::uint64_t total = 0;
    std::uint64_t failed = 0;
};

struct CrawlReport {
    std::uint64_t total = 0;
    std::uint64_t success = 0;
    std::uint64_t failed = 0;
    std::array<std::uint64_t, 7> by_category{};
    std::array<TierCounts, 6> by_tier{};
    std::uint64_t phantom = 0;
    std::uint64_t truncated = 0;
    std::map<std::string, std::uint64_t> extraction_methods;
    std::string render_stage;  // "renderer", "unavailable" or "disabled"
};

nlohmann::json to_json(const CrawlReport& r);

struct CrawlResult {
    std::vector<CrawlOutcome> outcomes;  // input order
    CrawlReport report;
};

class Crawler {
public:
    explicit Crawler(CrawlConfig config, PageRenderer* renderer = nullptr);

    // Follows 3xx hops (headers only) to the terminal URL and re-canonicalises
    // it. Throws CrawlFailure: Timeout, DnsOrExpired (phantom), Other for loops
    // or chains longer than max_redirects.
    std::string resolve_redirects(const std::string& url);

    bool robots_allowed(const std::string& url);

    // Never throws; every failure becomes a categorised outcome.
    CrawlOutcome fetch_page(const std::string& url);

    // urls must be distinct (DuplicateUrl otherwise). ids, when given, align
    // with urls; missing ids are S0000001, S0000002, ... by position.
    CrawlResult crawl_batch(const std::vector<std::string>& urls, const std::vector<std::string>& ids = {});

    const CrawlConfig& config() const noexcept { return config_; }
    std::string render_stage() const;

    // Classifies a terminal page. Exposed for tests.
    CrawlOutcome classify_page(const std::string& url, const RawPage& page) const;

private:
    struct Hop;
    Hop request(const std::string& url, double timeout_seconds, bool read_body);
    std::optional<std::string> load_robots(const std::string& origin);

    CrawlConfig config_;
    PageRenderer* renderer_;
    DomainGate gate_;
    RobotsCache robots_;
};

}  // namespace citeaudit::crawl
