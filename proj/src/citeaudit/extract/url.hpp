#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citeaudit::extract {

struct UrlParts {
    std::string scheme;  // lowercased
    std::string userinfo;
    std::string host;    // lowercased; IPv6 literals keep their brackets
    std::optional<int> port;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;

    std::string to_string() const;
};

// Throws InvalidUrl unless the input is an absolute URL with a non-empty host.
UrlParts parse_url(std::string_view url);

// Query-parameter names removed during canonicalization. An entry ending in
// '*' matches by prefix; matching is case-insensitive.
std::vector<std::string> default_tracking_params();

// Lowercases scheme and host, drops the fragment and a default port, and
// removes tracking parameters while keeping the order of the rest. Idempotent.
std::string canonicalize_url(std::string_view url, const std::vector<std::string>& tracking_params);
std::string canonicalize_url(std::string_view url);

// Registrable-domain approximation: last two labels, or last three when the
// second-level label is a common public suffix ("co.uk", "com.au", ...).
std::string registrable_domain(std::string_view host);

}  // namespace citeaudit::extract
