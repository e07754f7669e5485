#pragma once

#include <string>
#include <string_view>

namespace citeaudit::crawl {

enum class HostTier { ForumQA, SocialBlog, Academic, GovOrg, CommercialOther, News };

inline constexpr HostTier kAllTiers[] = {HostTier::ForumQA,  HostTier::SocialBlog,     HostTier::Academic,
                                         HostTier::GovOrg,   HostTier::CommercialOther, HostTier::News};

std::string_view to_string(HostTier t) noexcept;

// Rule table, first match wins: known forum/Q&A, social/blog, academic and
// news hosts; then academic suffixes (.edu, .ac.xx, .edu.xx); then
// government and organisation suffixes (.gov, .gov.xx, .go.xx, .mil, .int,
// .org); otherwise CommercialOther.
HostTier classify_host_tier(std::string_view hostname);

}  // namespace citeaudit::crawl
