#include "citeaudit/extract/url.hpp"

#include <algorithm>
#include <cctype>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"

namespace citeaudit::extract {

namespace {

bool valid_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
    });
}

bool valid_host(std::string_view h) {
    if (h.empty()) return false;
    if (h.front() == '[') return h.back() == ']' && h.size() > 2;
    if (h.front() == '.' || h.front() == '-') return false;
    return std::all_of(h.begin(), h.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        // Bytes >= 0x80 admit IDN hosts written in Unicode.
        return std::isalnum(u) || c == '-' || c == '.' || c == '_' || u >= 0x80;
    });
}

int default_port(std::string_view scheme) {
    if (scheme == "http" || scheme == "ws") return 80;
    if (scheme == "https" || scheme == "wss") return 443;
    if (scheme == "ftp") return 21;
    return -1;
}

bool tracking_match(std::string_view name, const std::vector<std::string>& patterns) {
    const std::string lower = text::to_lower(name);
    for (const auto& p : patterns) {
        if (!p.empty() && p.back() == '*') {
            if (lower.compare(0, p.size() - 1, p, 0, p.size() - 1) == 0 && lower.size() >= p.size() - 1) return true;
        } else if (lower == p) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::string UrlParts::to_string() const {
    std::string out = scheme + "://";
    if (!userinfo.empty()) out += userinfo + "@";
    out += host;
    if (port) out += ":" + std::to_string(*port);
    out += path;
    if (query) out += "?" + *query;
    if (fragment) out += "#" + *fragment;
    return out;
}

UrlParts parse_url(std::string_view raw) {
    const std::string_view url = text::trim(raw);
    for (char c : url)
        if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f)
            fail(ErrorCode::InvalidUrl, "URL contains whitespace or control characters");

    const auto colon = url.find("://");
    if (colon == std::string_view::npos) fail(ErrorCode::InvalidUrl, "not an absolute URL: " + std::string(url));
    UrlParts p;
    p.scheme = text::to_lower(url.substr(0, colon));
    if (!valid_scheme(p.scheme)) fail(ErrorCode::InvalidUrl, "bad scheme in " + std::string(url));

    std::string_view rest = url.substr(colon + 3);
    const auto frag = rest.find('#');
    if (frag != std::string_view::npos) {
        p.fragment = std::string(rest.substr(frag + 1));
        rest = rest.substr(0, frag);
    }
    const auto q = rest.find('?');
    if (q != std::string_view::npos) {
        p.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    const auto slash = rest.find('/');
    std::string_view authority = rest.substr(0, slash);
    p.path = slash == std::string_view::npos ? "" : std::string(rest.substr(slash));

    const auto at = authority.rfind('@');
    if (at != std::string_view::npos) {
        p.userinfo = std::string(authority.substr(0, at));
        authority = authority.substr(at + 1);
    }
    std::string_view host = authority;
    const auto port_colon = authority.rfind(':');
    const auto bracket = authority.rfind(']');
    if (port_colon != std::string_view::npos && (bracket == std::string_view::npos || port_colon > bracket)) {
        host = authority.substr(0, port_colon);
        const auto port_text = authority.substr(port_colon + 1);
        if (!port_text.empty()) {
            if (port_text.size() > 5 || !std::all_of(port_text.begin(), port_text.end(), [](char c) { return c >= '0' && c <= '9'; }))
                fail(ErrorCode::InvalidUrl, "bad port in " + std::string(url));
            const int port = std::stoi(std::string(port_text));
            if (port > 65535) fail(ErrorCode::InvalidUrl, "port out of range in " + std::string(url));
            p.port = port;
        }
    }
    p.host = text::to_lower(host);
    while (!p.host.empty() && p.host.back() == '.') p.host.pop_back();
    if (!valid_host(p.host)) fail(ErrorCode::InvalidUrl, "bad host in " + std::string(url));
    return p;
}

std::vector<std::string> default_tracking_params() {
    return {"utm_*", "gclid", "gclsrc", "dclid", "fbclid", "msclkid", "yclid", "twclid", "igshid",
            "mc_cid", "mc_eid", "_ga", "_gl", "ref", "ref_src", "ref_url", "srsltid", "spm"};
}

std::string canonicalize_url(std::string_view url) {
    static const auto defaults = default_tracking_params();
    return canonicalize_url(url, defaults);
}

std::string canonicalize_url(std::string_view url, const std::vector<std::string>& tracking_params) {
    UrlParts p = parse_url(url);
    p.fragment.reset();
    if (p.port && *p.port == default_port(p.scheme)) p.port.reset();
    if (p.query) {
        std::string kept;
        for (const auto& param : text::split(*p.query, '&')) {
            if (param.empty()) continue;
            const auto eq = param.find('=');
            const std::string_view name = std::string_view(param).substr(0, eq);
            if (tracking_match(name, tracking_params)) continue;
            if (!kept.empty()) kept += '&';
            kept += param;
        }
        if (kept.empty()) p.query.reset();
        else p.query = std::move(kept);
    }
    return p.to_string();
}

std::string registrable_domain(std::string_view host_in) {
    std::string host = text::to_lower(host_in);
    if (!host.empty() && host.front() == '[') return host;
    if (std::all_of(host.begin(), host.end(), [](char c) { return (c >= '0' && c <= '9') || c == '.'; })) return host;
    std::vector<std::string> labels = text::split(host, '.');
    labels.erase(std::remove(labels.begin(), labels.end(), std::string()), labels.end());
    if (labels.size() <= 2) return host;
    static const std::vector<std::string> second_level{"co", "com", "ac", "gov", "edu", "org", "net", "ne", "or", "go"};
    const auto& sld = labels[labels.size() - 2];
    const bool short_tld = labels.back().size() == 2;
    const std::size_t keep =
        (short_tld && std::find(second_level.begin(), second_level.end(), sld) != second_level.end()) ? 3 : 2;
    std::string out;
    for (std::size_t i = labels.size() - keep; i < labels.size(); ++i) {
        if (!out.empty()) out += '.';
        out += labels[i];
    }
    return out;
}

}  // namespace citeaudit::extract
