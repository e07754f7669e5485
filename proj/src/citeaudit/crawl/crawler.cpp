#include "citeaudit/crawl/crawler.hpp"

#include <httplib.h>
#include <netdb.h>
#include <sys/socket.h>

#include <atomic>
#include <ctime>
#include <set>
#include <thread>
#include <unordered_set>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/crawl/html.hpp"
#include "citeaudit/extract/url.hpp"

namespace citeaudit::crawl {

namespace {

using Clock = std::chrono::steady_clock;

// Signature checks only apply to short pages; a long article that mentions
// "captcha" is still an article.
constexpr std::size_t kInterstitialMaxChars = 2000;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm g{};
    gmtime_r(&t, &g);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &g);
    return buf;
}

std::string origin_of(const extract::UrlParts& p) {
    std::string o = p.scheme + "://" + p.host;
    if (p.port) o += ":" + std::to_string(*p.port);
    return o;
}

std::string path_of(const extract::UrlParts& p) {
    std::string path = p.path.empty() ? "/" : p.path;
    if (p.query) path += "?" + *p.query;
    return path;
}

bool is_ip_literal(std::string_view host) {
    if (!host.empty() && host.front() == '[') return true;
    return !host.empty() && host.find_first_not_of("0123456789.") == std::string_view::npos;
}

void check_dns(const std::string& host) {
    if (is_ip_literal(host) || host == "localhost") return;
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = getaddrinfo(host.c_str(), nullptr, &hints, &res);
    if (res) freeaddrinfo(res);
    if (rc != 0) throw CrawlFailure(FailureCategory::DnsOrExpired, std::string("dns: ") + gai_strerror(rc), true);
}

std::string resolve_location(const extract::UrlParts& base, const std::string& loc) {
    if (loc.find("://") != std::string::npos) return loc;
    if (loc.rfind("//", 0) == 0) return base.scheme + ":" + loc;
    if (!loc.empty() && loc.front() == '/') return origin_of(base) + loc;
    if (!loc.empty() && loc.front() == '?') return origin_of(base) + (base.path.empty() ? "/" : base.path) + loc;
    std::string dir = base.path.empty() ? "/" : base.path;
    dir.erase(dir.rfind('/') + 1);
    return origin_of(base) + dir + loc;
}

bool contains_any(std::string_view haystack_lower, const std::vector<std::string>& needles, std::string* hit) {
    for (const auto& n : needles) {
        if (n.empty()) continue;
        if (haystack_lower.find(text::to_lower(n)) != std::string_view::npos) {
            if (hit) *hit = n;
            return true;
        }
    }
    return false;
}

std::string canonical_or_raw(const std::string& url) {
    try {
        return extract::canonicalize_url(url);
    } catch (const Error&) {
        return url;
    }
}

HostTier tier_of(const std::string& url) {
    try {
        return classify_host_tier(extract::parse_url(url).host);
    } catch (const Error&) {
        return HostTier::CommercialOther;
    }
}

}  // namespace

std::string_view to_string(FailureCategory c) noexcept {
    switch (c) {
        case FailureCategory::BotBlockOrJs: return "bot_block_or_js";
        case FailureCategory::FileFormat: return "file_format";
        case FailureCategory::EmptyResponse: return "empty_response";
        case FailureCategory::ServerError: return "server_error";
        case FailureCategory::Timeout: return "timeout";
        case FailureCategory::Other: return "other";
        case FailureCategory::DnsOrExpired: return "dns_or_expired";
    }
    return "other";
}

std::optional<FailureCategory> parse_failure_category(std::string_view s) noexcept {
    for (auto c : kAllFailureCategories)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

std::vector<std::string> default_bot_block_signatures() {
    return {"just a moment...",
            "checking your browser",
            "cf-browser-verification",
            "cf-chl-",
            "attention required! | cloudflare",
            "enable javascript and cookies to continue",
            "please enable javascript",
            "you need to enable javascript",
            "captcha",
            "are you a robot",
            "are you a human",
            "verify you are human",
            "access to this page has been denied",
            "request unsuccessful. incapsula",
            "pardon our interruption",
            "too many requests"};
}

std::vector<std::string> default_login_signatures() {
    return {"sign in to continue", "log in to continue", "please sign in", "please log in",
            "you must be logged in", "login required", "sign in to your account", "log in to your account"};
}

std::vector<std::string> default_parked_signatures() {
    return {"this domain is for sale", "this domain may be for sale", "domain has expired", "buy this domain",
            "domain is parked", "parked free", "parkingcrew", "sedoparking"};
}

void CrawlConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) fail(ErrorCode::ConfigInvalid, std::string("crawl config: ") + what);
    };
    need(redirect_timeout > 0, "redirect_timeout must be positive");
    need(fetch_timeout > 0, "fetch_timeout must be positive");
    need(global_concurrency > 0, "global_concurrency must be positive");
    need(content_cap > 0, "content_cap must be positive");
    need(min_content_length > 0, "min_content_length must be positive");
    need(per_domain_delay > 0, "per_domain_delay must be positive");
    need(max_redirects > 0, "max_redirects must be positive");
    need(max_body_bytes > 0, "max_body_bytes must be positive");
    need(!user_agent.empty(), "user_agent must be set");
}

nlohmann::json to_json(const CrawlConfig& c) {
    return {{"redirect_timeout", c.redirect_timeout},
            {"fetch_timeout", c.fetch_timeout},
            {"global_concurrency", c.global_concurrency},
            {"content_cap", c.content_cap},
            {"min_content_length", c.min_content_length},
            {"per_domain_delay", c.per_domain_delay},
            {"bot_block_signatures", c.bot_block_signatures},
            {"login_signatures", c.login_signatures},
            {"parked_signatures", c.parked_signatures},
            {"user_agent", c.user_agent},
            {"respect_robots", c.respect_robots},
            {"render", c.render},
            {"max_redirects", c.max_redirects},
            {"max_body_bytes", c.max_body_bytes},
            {"menu_link_density", c.menu_link_density},
            {"host_overrides", c.host_overrides}};
}

CrawlConfig crawl_config_from_json(const nlohmann::json& j) {
    CrawlConfig c;
    try {
        static const std::set<std::string> known{"redirect_timeout", "fetch_timeout", "global_concurrency",
                                                 "content_cap", "min_content_length", "per_domain_delay",
                                                 "bot_block_signatures", "login_signatures", "parked_signatures",
                                                 "user_agent", "respect_robots", "render", "max_redirects",
                                                 "max_body_bytes", "menu_link_density", "host_overrides"};
        for (const auto& [k, _] : j.items())
            if (!known.count(k)) fail(ErrorCode::ConfigInvalid, "unknown crawl key " + k);
        c.redirect_timeout = j.value("redirect_timeout", c.redirect_timeout);
        c.fetch_timeout = j.value("fetch_timeout", c.fetch_timeout);
        c.global_concurrency = j.value("global_concurrency", c.global_concurrency);
        c.content_cap = j.value("content_cap", c.content_cap);
        c.min_content_length = j.value("min_content_length", c.min_content_length);
        c.per_domain_delay = j.value("per_domain_delay", c.per_domain_delay);
        c.bot_block_signatures = j.value("bot_block_signatures", c.bot_block_signatures);
        c.login_signatures = j.value("login_signatures", c.login_signatures);
        c.parked_signatures = j.value("parked_signatures", c.parked_signatures);
        c.user_agent = j.value("user_agent", c.user_agent);
        c.respect_robots = j.value("respect_robots", c.respect_robots);
        c.render = j.value("render", c.render);
        c.max_redirects = j.value("max_redirects", c.max_redirects);
        c.max_body_bytes = j.value("max_body_bytes", c.max_body_bytes);
        c.menu_link_density = j.value("menu_link_density", c.menu_link_density);
        c.host_overrides = j.value("host_overrides", c.host_overrides);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("crawl config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const CrawlOutcome& o) {
    return {{"url_id", o.url_id},
            {"url", o.url},
            {"final_url", o.final_url},
            {"status", o.status == CrawlStatus::Success ? "success" : "failed"},
            {"failure", o.failure ? nlohmann::json(to_string(*o.failure)) : nlohmann::json(nullptr)},
            {"failure_detail", o.failure_detail},
            {"http_status", o.http_status},
            {"content", o.content},
            {"content_length", o.content_length},
            {"truncated", o.truncated},
            {"fetched_at", o.fetched_at},
            {"phantom", o.phantom},
            {"host_tier", to_string(o.tier)},
            {"extraction_method", o.extraction_method},
            {"redirects", o.redirects}};
}

CrawlOutcome outcome_from_json(const nlohmann::json& j) {
    try {
        CrawlOutcome o;
        o.url_id = j.at("url_id").get<std::string>();
        o.url = j.at("url").get<std::string>();
        o.final_url = j.value("final_url", "");
        const auto status = j.at("status").get<std::string>();
        if (status != "success" && status != "failed") fail(ErrorCode::SchemaMismatch, "bad crawl status " + status);
        o.status = status == "success" ? CrawlStatus::Success : CrawlStatus::Failed;
        if (!j.at("failure").is_null()) {
            o.failure = parse_failure_category(j.at("failure").get<std::string>());
            if (!o.failure) fail(ErrorCode::SchemaMismatch, "unknown failure category");
        }
        o.failure_detail = j.value("failure_detail", "");
        o.http_status = j.value("http_status", 0);
        o.content = j.value("content", "");
        o.content_length = j.value("content_length", text::utf8_length(o.content));
        o.truncated = j.value("truncated", false);
        o.fetched_at = j.value("fetched_at", "");
        o.phantom = j.value("phantom", false);
        o.tier = HostTier::CommercialOther;
        const auto tier = j.value("host_tier", "");
        for (auto t : kAllTiers)
            if (to_string(t) == tier) o.tier = t;
        o.extraction_method = j.value("extraction_method", "");
        o.redirects = j.value("redirects", 0);
        if ((o.status == CrawlStatus::Success) == o.failure.has_value())
            fail(ErrorCode::SchemaMismatch, "crawl outcome status and failure disagree");
        return o;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaMismatch, std::string("crawl outcome: ") + e.what());
    }
}

DomainGate::Ticket::~Ticket() {
    if (gate_) gate_->release(domain_);
}

DomainGate::Ticket DomainGate::acquire(const std::string& domain) {
    std::unique_lock lock(mu_);
    for (;;) {
        auto& slot = slots_[domain];
        if (!slot.busy) {
            const auto ready = slot.last_done
                                   ? *slot.last_done + std::chrono::duration_cast<Clock::duration>(
                                                           std::chrono::duration<double>(delay_))
                                   : Clock::now();
            if (Clock::now() >= ready) {
                slot.busy = true;
                return Ticket(this, domain);
            }
            cv_.wait_until(lock, ready);
        } else {
            cv_.wait(lock);
        }
    }
}

void DomainGate::release(const std::string& domain) {
    {
        std::lock_guard lock(mu_);
        auto& slot = slots_[domain];
        slot.busy = false;
        slot.last_done = Clock::now();
    }
    cv_.notify_all();
}

nlohmann::json to_json(const CrawlReport& r) {
    nlohmann::json cats = nlohmann::json::array();
    for (auto c : kAllFailureCategories) {
        const auto n = r.by_category[static_cast<std::size_t>(c)];
        cats.push_back({{"category", to_string(c)},
                        {"urls", n},
                        {"pct", r.failed ? 100.0 * static_cast<double>(n) / static_cast<double>(r.failed) : 0.0}});
    }
    nlohmann::json tiers = nlohmann::json::array();
    for (auto t : kAllTiers) {
        const auto& tc = r.by_tier[static_cast<std::size_t>(t)];
        tiers.push_back({{"tier", to_string(t)},
                         {"total", tc.total},
                         {"failed", tc.failed},
                         {"failed_pct", tc.total ? 100.0 * static_cast<double>(tc.failed) / static_cast<double>(tc.total)
                                                 : 0.0}});
    }
    return {{"total", r.total},
            {"success", r.success},
            {"failed", r.failed},
            {"success_pct", r.total ? 100.0 * static_cast<double>(r.success) / static_cast<double>(r.total) : 0.0},
            {"failure_categories", cats},
            {"host_tiers", tiers},
            {"phantom", r.phantom},
            {"truncated", r.truncated},
            {"extraction_methods", r.extraction_methods},
            {"render_stage", r.render_stage},
            {"robots_unreachable_policy", "allow"}};
}

struct Crawler::Hop {
    int status = 0;
    std::string location;
    std::string content_type;
    std::string body;
};

Crawler::Crawler(CrawlConfig config, PageRenderer* renderer)
    : config_(std::move(config)),
      renderer_(renderer),
      gate_(config_.per_domain_delay),
      robots_([this](const std::string& origin) { return load_robots(origin); }) {
    config_.validate();
}

std::string Crawler::render_stage() const {
    if (!config_.render) return "disabled";
    return renderer_ ? "renderer" : "unavailable";
}

Crawler::Hop Crawler::request(const std::string& url, double timeout, bool read_body) {
    extract::UrlParts parts;
    try {
        parts = extract::parse_url(url);
    } catch (const Error& e) {
        throw CrawlFailure(FailureCategory::Other, std::string("invalid url: ") + e.what());
    }
    if (parts.scheme != "http" && parts.scheme != "https")
        throw CrawlFailure(FailureCategory::Other, "unsupported scheme " + parts.scheme);

    std::string target = parts.host;
    if (parts.port) target += ":" + std::to_string(*parts.port);
    std::string connect = target;
    if (auto it = config_.host_overrides.find(parts.host); it != config_.host_overrides.end()) {
        connect = it->second;
    } else {
        check_dns(parts.host);
    }

    auto ticket = gate_.acquire(extract::registrable_domain(parts.host));
    httplib::Client cli(parts.scheme + "://" + connect);
    const auto secs = static_cast<time_t>(timeout);
    const auto usecs = static_cast<time_t>((timeout - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    cli.set_follow_location(false);
    cli.set_keep_alive(false);
    httplib::Headers headers{{"User-Agent", config_.user_agent},
                             {"Accept", "text/html,application/xhtml+xml,text/plain;q=0.9,*/*;q=0.8"}};
    if (connect != target) headers.emplace("Host", target);

    Hop hop;
    const auto start = Clock::now();
    bool headers_only = false, capped = false, timed_out = false;
    auto res = cli.Get(
        path_of(parts), headers,
        [&](const httplib::Response& r) {
            hop.status = r.status;
            hop.location = r.get_header_value("Location");
            hop.content_type = r.get_header_value("Content-Type");
            headers_only = !read_body || (r.status >= 300 && r.status < 400);
            return !headers_only;
        },
        [&](const char* data, std::size_t len) {
            if (seconds_since(start) > timeout) {
                timed_out = true;
                return false;
            }
            const auto room = config_.max_body_bytes - hop.body.size();
            hop.body.append(data, std::min(room, len));
            if (len >= room) {
                capped = true;
                return false;
            }
            return true;
        });
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Canceled && (headers_only || capped) && !timed_out) return hop;
        if (timed_out || err == httplib::Error::ConnectionTimeout)
            throw CrawlFailure(FailureCategory::Timeout, "timed out after " + text::format_fixed(timeout, 1) + "s");
        if ((err == httplib::Error::Read || err == httplib::Error::Write) && seconds_since(start) >= timeout * 0.9)
            throw CrawlFailure(FailureCategory::Timeout, "read timed out");
        if (err == httplib::Error::Connection || err == httplib::Error::Read || err == httplib::Error::Write ||
            err == httplib::Error::SSLConnection || err == httplib::Error::SSLServerVerification ||
            err == httplib::Error::SSLLoadingCerts)
            throw CrawlFailure(FailureCategory::ServerError, "transport: " + httplib::to_string(err));
        throw CrawlFailure(FailureCategory::Other, "transport: " + httplib::to_string(err));
    }
    hop.status = res->status;
    return hop;
}

std::optional<std::string> Crawler::load_robots(const std::string& origin) {
    try {
        std::string url = origin + "/robots.txt";
        for (int i = 0; i < 5; ++i) {
            auto hop = request(url, config_.fetch_timeout, true);
            if (hop.status >= 300 && hop.status < 400 && !hop.location.empty()) {
                url = resolve_location(extract::parse_url(url), hop.location);
                continue;
            }
            if (hop.status == 200) return hop.body;
            return std::nullopt;
        }
    } catch (...) {
    }
    return std::nullopt;
}

bool Crawler::robots_allowed(const std::string& url) {
    if (!config_.respect_robots) return true;
    const auto parts = extract::parse_url(url);
    return robots_.allowed(origin_of(parts), config_.user_agent, path_of(parts));
}

std::string Crawler::resolve_redirects(const std::string& url) {
    const auto start = Clock::now();
    std::unordered_set<std::string> seen{url};
    std::string current = url;
    for (int hops = 0;; ++hops) {
        const double left = config_.redirect_timeout - seconds_since(start);
        if (left <= 0) throw CrawlFailure(FailureCategory::Timeout, "redirect chain exceeded time budget");
        const auto hop = request(current, left, false);
        if (hop.status < 300 || hop.status >= 400 || hop.location.empty()) return canonical_or_raw(current);
        if (hops + 1 > config_.max_redirects) throw CrawlFailure(FailureCategory::Other, "too many redirects");
        current = canonical_or_raw(resolve_location(extract::parse_url(current), hop.location));
        if (!seen.insert(current).second) throw CrawlFailure(FailureCategory::Other, "redirect loop");
    }
}

CrawlOutcome Crawler::classify_page(const std::string& url, const RawPage& page) const {
    CrawlOutcome o;
    o.url = url;
    o.final_url = canonical_or_raw(page.final_url.empty() ? url : page.final_url);
    o.tier = tier_of(url);
    o.http_status = page.status;
    auto failed = [&](FailureCategory c, std::string detail) {
        o.status = CrawlStatus::Failed;
        o.failure = c;
        o.failure_detail = std::move(detail);
        o.phantom = c == FailureCategory::DnsOrExpired;
        o.content.clear();
        o.content_length = 0;
        return o;
    };
    const auto body_lower = text::to_lower(std::string_view(page.body).substr(0, 200000));
    std::string hit;

    if (page.status >= 400) {
        if (contains_any(body_lower, config_.bot_block_signatures, &hit))
            return failed(FailureCategory::BotBlockOrJs, "HTTP " + std::to_string(page.status) + ", signature \"" + hit + "\"");
        if (page.status == 429) return failed(FailureCategory::BotBlockOrJs, "HTTP 429");
        return failed(FailureCategory::ServerError, "HTTP " + std::to_string(page.status));
    }
    if (page.status < 200 || page.status >= 300)
        return failed(FailureCategory::Other, "unexpected HTTP " + std::to_string(page.status));
    if (is_unsupported_format(page.body, page.content_type))
    {
        std::string detail = "content type " + (page.content_type.empty() ? std::string("(none)") : page.content_type);
        if (page.body.rfind("%PDF-", 0) == 0) detail += ", pdf magic bytes";
        return failed(FailureCategory::FileFormat, detail);
    }

    ExtractedText ex;
    try {
        ex = extract_main_text(page.body, page.content_type.empty() ? "text/html" : page.content_type);
    } catch (const Error& e) {
        return failed(FailureCategory::FileFormat, e.what());
    }
    o.extraction_method = std::string(to_string(ex.method));
    const auto chars = text::utf8_length(ex.text);
    const auto visible_lower = text::to_lower(ex.title + "\n" + ex.text);
    if (chars < kInterstitialMaxChars) {
        if (contains_any(visible_lower, config_.bot_block_signatures, &hit) ||
            contains_any(body_lower, config_.bot_block_signatures, &hit))
            return failed(FailureCategory::BotBlockOrJs, "signature \"" + hit + "\"");
    }
    if (chars < config_.min_content_length)
        return failed(FailureCategory::EmptyResponse, std::to_string(chars) + " chars after extraction");
    if (chars < kInterstitialMaxChars) {
        if (contains_any(visible_lower, config_.parked_signatures, &hit))
            return failed(FailureCategory::DnsOrExpired, "parked or expired domain \"" + hit + "\"");
        if (contains_any(visible_lower, config_.login_signatures, &hit))
            return failed(FailureCategory::Other, "login page \"" + hit + "\"");
    }
    if (ex.method == ExtractionMethod::VisibleText && ex.link_density >= config_.menu_link_density)
        return failed(FailureCategory::Other, "menu page, link density " + text::format_fixed(ex.link_density, 2));

    o.status = CrawlStatus::Success;
    if (chars > config_.content_cap) {
        o.content = std::string(text::utf8_prefix(ex.text, config_.content_cap));
        o.truncated = true;
    } else {
        o.content = std::move(ex.text);
    }
    o.content_length = text::utf8_length(o.content);
    return o;
}

CrawlOutcome Crawler::fetch_page(const std::string& url) {
    const auto fetched_at = utc_now();
    CrawlOutcome o;
    int redirects = 0;
    try {
        if (renderer_ && config_.render) {
            try {
                if (robots_allowed(url)) {
                    if (auto page = renderer_->render(url, config_.fetch_timeout);
                        page && page->status >= 200 && page->status < 300) {
                        o = classify_page(url, *page);
                        if (o.status == CrawlStatus::Success) {
                            o.fetched_at = fetched_at;
                            return o;
                        }
                    }
                }
            } catch (...) {
                // fall through to plain retrieval
            }
        }
        const auto start = Clock::now();
        std::unordered_set<std::string> seen{url};
        std::string current = url;
        for (;;) {
            if (!robots_allowed(current)) throw CrawlFailure(FailureCategory::ServerError, "disallowed by robots.txt");
            auto hop = request(current, config_.fetch_timeout, true);
            if (hop.status >= 300 && hop.status < 400 && !hop.location.empty()) {
                if (seconds_since(start) > config_.redirect_timeout)
                    throw CrawlFailure(FailureCategory::Timeout, "redirect chain exceeded time budget");
                if (redirects + 1 > config_.max_redirects) throw CrawlFailure(FailureCategory::Other, "too many redirects");
                current = canonical_or_raw(resolve_location(extract::parse_url(current), hop.location));
                if (!seen.insert(current).second) throw CrawlFailure(FailureCategory::Other, "redirect loop");
                ++redirects;
                continue;
            }
            o = classify_page(url, RawPage{hop.status, hop.content_type, std::move(hop.body), current});
            break;
        }
    } catch (const CrawlFailure& f) {
        o = CrawlOutcome{};
        o.url = url;
        o.final_url = url;
        o.tier = tier_of(url);
        o.status = CrawlStatus::Failed;
        o.failure = f.category;
        o.failure_detail = f.what();
        o.phantom = f.phantom || f.category == FailureCategory::DnsOrExpired;
    } catch (const std::exception& e) {
        o = CrawlOutcome{};
        o.url = url;
        o.final_url = url;
        o.tier = tier_of(url);
        o.status = CrawlStatus::Failed;
        o.failure = FailureCategory::Other;
        o.failure_detail = e.what();
    }
    o.redirects = redirects;
    o.fetched_at = fetched_at;
    return o;
}

CrawlResult Crawler::crawl_batch(const std::vector<std::string>& urls, const std::vector<std::string>& ids) {
    {
        std::unordered_set<std::string> seen;
        for (const auto& u : urls)
            if (!seen.insert(u).second) fail(ErrorCode::DuplicateUrl, "duplicate URL in crawl input: " + u);
    }
    CrawlResult res;
    res.outcomes.resize(urls.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < urls.size();) res.outcomes[i] = fetch_page(urls[i]);
    };
    const auto n = std::min<std::size_t>(config_.global_concurrency, urls.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    auto& r = res.report;
    r.render_stage = render_stage();
    for (std::size_t i = 0; i < urls.size(); ++i) {
        auto& o = res.outcomes[i];
        if (i < ids.size() && !ids[i].empty()) {
            o.url_id = ids[i];
        } else {
            char buf[16];
            std::snprintf(buf, sizeof buf, "S%07zu", i + 1);
            o.url_id = buf;
        }
        ++r.total;
        auto& tc = r.by_tier[static_cast<std::size_t>(o.tier)];
        ++tc.total;
        if (o.status == CrawlStatus::Success) {
            ++r.success;
            ++r.extraction_methods[o.extraction_method];
        } else {
            ++r.failed;
            ++tc.failed;
            ++r.by_category[static_cast<std::size_t>(*o.failure)];
        }
        r.phantom += o.phantom;
        r.truncated += o.truncated;
    }
    return res;
}

}  // namespace citeaudit::crawl
