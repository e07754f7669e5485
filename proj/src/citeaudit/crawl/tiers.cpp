#include "citeaudit/crawl/tiers.hpp"

#include <array>
#include <vector>

#include "citeaudit/common/text.hpp"

namespace citeaudit::crawl {

namespace {

struct HostRule {
    HostTier tier;
    std::vector<std::string_view> hosts;
};

const std::array<HostRule, 4>& host_rules() {
    static const std::array<HostRule, 4> rules{{
        {HostTier::ForumQA,
         {"stackoverflow.com", "stackexchange.com", "superuser.com", "serverfault.com", "askubuntu.com",
          "mathoverflow.net", "reddit.com", "quora.com", "wikipedia.org", "wikihow.com", "fandom.com",
          "answers.com", "tripadvisor.com", "discourse.org", "github.com", "ycombinator.com", "zhihu.com",
          "stackshare.io"}},
        {HostTier::SocialBlog,
         {"twitter.com", "x.com", "youtube.com", "youtu.be", "instagram.com", "tiktok.com", "facebook.com",
          "medium.com", "substack.com", "linkedin.com", "pinterest.com", "tumblr.com", "blogspot.com",
          "wordpress.com", "threads.net", "dev.to", "hashnode.dev", "vimeo.com"}},
        {HostTier::Academic,
         {"arxiv.org", "doi.org", "pubmed.ncbi.nlm.nih.gov", "pmc.ncbi.nlm.nih.gov", "springer.com",
          "sciencedirect.com", "nature.com", "wiley.com", "researchgate.net", "jstor.org", "ieee.org", "acm.org",
          "semanticscholar.org", "scholar.google.com", "plos.org", "frontiersin.org", "mdpi.com",
          "tandfonline.com", "sagepub.com", "biorxiv.org", "medrxiv.org", "ssrn.com", "cell.com",
          "science.org", "oup.com", "cambridge.org", "bmj.com", "thelancet.com", "nejm.org", "jamanetwork.com"}},
        {HostTier::News,
         {"nytimes.com", "bbc.co.uk", "bbc.com", "cnn.com", "reuters.com", "apnews.com", "theguardian.com",
          "washingtonpost.com", "wsj.com", "bloomberg.com", "forbes.com", "npr.org", "cnbc.com", "usatoday.com",
          "nbcnews.com", "cbsnews.com", "abcnews.go.com", "foxnews.com", "latimes.com", "ft.com",
          "economist.com", "time.com", "theverge.com", "techcrunch.com", "wired.com", "aljazeera.com",
          "independent.co.uk", "telegraph.co.uk", "businessinsider.com", "axios.com", "politico.com",
          "theatlantic.com", "newsweek.com", "huffpost.com", "vox.com", "arstechnica.com"}},
    }};
    return rules;
}

bool host_matches(std::string_view host, std::string_view domain) {
    if (host == domain) return true;
    return host.size() > domain.size() && host.substr(host.size() - domain.size()) == domain &&
           host[host.size() - domain.size() - 1] == '.';
}

std::vector<std::string_view> labels_of(std::string_view host) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= host.size(); ++i) {
        if (i == host.size() || host[i] == '.') {
            out.push_back(host.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(HostTier t) noexcept {
    switch (t) {
        case HostTier::ForumQA: return "forum_qa";
        case HostTier::SocialBlog: return "social_blog";
        case HostTier::Academic: return "academic";
        case HostTier::GovOrg: return "gov_org";
        case HostTier::CommercialOther: return "commercial_other";
        case HostTier::News: return "news";
    }
    return "commercial_other";
}

HostTier classify_host_tier(std::string_view hostname) {
    auto host = text::to_lower(hostname);
    while (!host.empty() && host.back() == '.') host.pop_back();
    if (host.rfind("www.", 0) == 0) host.erase(0, 4);

    // News before the others so abcnews.go.com is not caught by a suffix rule.
    for (auto idx : {3, 0, 1, 2}) {
        const auto& rule = host_rules()[static_cast<std::size_t>(idx)];
        for (auto d : rule.hosts)
            if (host_matches(host, d)) return rule.tier;
    }
    const auto labels = labels_of(host);
    for (std::string_view p : {"forum", "forums", "community", "answers"})
        if (labels.size() > 2 && labels.front() == p) return HostTier::ForumQA;
    if (labels.size() > 2 && labels.front() == "blog") return HostTier::SocialBlog;
    if (labels.size() > 2 && labels.front() == "news") return HostTier::News;

    const auto n = labels.size();
    if (n >= 2) {
        const auto tld = labels[n - 1];
        const auto sld = labels[n - 2];
        if (tld == "edu") return HostTier::Academic;
        if (n >= 3 && tld.size() == 2 && (sld == "ac" || sld == "edu")) return HostTier::Academic;
        if (tld == "gov" || tld == "mil" || tld == "int" || tld == "org") return HostTier::GovOrg;
        if (n >= 3 && tld.size() == 2 && (sld == "gov" || sld == "go" || sld == "gob" || sld == "gouv" || sld == "org" || sld == "or"))
            return HostTier::GovOrg;
        if (host_matches(host, "europa.eu") || host_matches(host, "gc.ca")) return HostTier::GovOrg;
    }
    return HostTier::CommercialOther;
}

}  // namespace citeaudit::crawl
