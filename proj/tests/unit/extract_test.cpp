#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/extract/extractor.hpp"
#include "citeaudit/extract/sentences.hpp"
#include "citeaudit/extract/url.hpp"

using namespace citeaudit;
using namespace citeaudit::extract;
using nlohmann::json;

namespace {

std::string data_path(const std::string& name) { return std::string(CITEAUDIT_TEST_DATA) + "/" + name; }

RawResponse raw(Provider p, std::string body, json payload) {
    RawResponse r;
    r.response_id = "r1";
    r.provider = p;
    r.body_text = std::move(body);
    r.citation_payload = std::move(payload);
    return r;
}

}  // namespace

// ---- URLs ---------------------------------------------------------------

TEST(CanonicalizeUrl, StripsTrackingAndLowercasesHost) {
    EXPECT_EQ(canonicalize_url("https://Ex.com/a?utm_source=openai"), "https://ex.com/a");
    EXPECT_EQ(canonicalize_url("https://ex.com/a?id=3&utm_medium=x"), "https://ex.com/a?id=3");
    EXPECT_EQ(canonicalize_url("https://ex.com/a"), "https://ex.com/a");
}

TEST(CanonicalizeUrl, DropsFragmentAndDefaultPortKeepsOrder) {
    EXPECT_EQ(canonicalize_url("HTTP://Ex.COM:80/Path/X?b=2&gclid=1&a=1#top"), "http://ex.com/Path/X?b=2&a=1");
    EXPECT_EQ(canonicalize_url("https://ex.com:8443/p"), "https://ex.com:8443/p");
    EXPECT_EQ(canonicalize_url("https://ex.com/p?UTM_Campaign=z&fbclid=q"), "https://ex.com/p");
    EXPECT_EQ(canonicalize_url("https://ex.com/p?reference=1"), "https://ex.com/p?reference=1");
}

TEST(CanonicalizeUrl, CustomTrackingList) {
    EXPECT_EQ(canonicalize_url("https://ex.com/p?session=9&id=1", {"session"}), "https://ex.com/p?id=1");
    EXPECT_EQ(canonicalize_url("https://ex.com/p?utm_source=x", {"session"}), "https://ex.com/p?utm_source=x");
}

TEST(CanonicalizeUrl, RejectsInvalid) {
    for (const char* bad : {"", "not a url", "ex.com/a", "https://", "https://exa mple.com/", "https://ex.com:99999/",
                            "1http://ex.com"}) {
        try {
            canonicalize_url(bad);
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidUrl) << bad;
        }
    }
}

TEST(CanonicalizeUrl, IsIdempotent) {
    std::mt19937 rng(1);
    const std::vector<std::string> hosts{"Ex.com", "a.B.co.uk", "xn--bcher-kva.example", "127.0.0.1", "[::1]"};
    const std::vector<std::string> params{"utm_source=a", "id=3", "gclid=x", "q=hello%20world", "ref=abc", "x", "a=1"};
    for (int i = 0; i < 500; ++i) {
        std::string url = (i % 2 ? "HTTPS://" : "http://") + hosts[rng() % hosts.size()];
        if (i % 3 == 0) url += ":" + std::to_string(i % 2 ? 443 : 8080);
        url += "/p" + std::to_string(i);
        const int np = rng() % 4;
        for (int k = 0; k < np; ++k) url += (k == 0 ? "?" : "&") + params[rng() % params.size()];
        if (i % 5 == 0) url += "#frag";
        const auto once = canonicalize_url(url);
        EXPECT_EQ(canonicalize_url(once), once) << url;
    }
}

TEST(RegistrableDomain, CollapsesSubdomains) {
    EXPECT_EQ(registrable_domain("www.nih.gov"), "nih.gov");
    EXPECT_EQ(registrable_domain("a.b.bbc.co.uk"), "bbc.co.uk");
    EXPECT_EQ(registrable_domain("example.com"), "example.com");
    EXPECT_EQ(registrable_domain("127.0.0.1"), "127.0.0.1");
}

// ---- sentences ----------------------------------------------------------

TEST(Sentences, BasicCases) {
    EXPECT_EQ(segment_sentences("A. B. C.").size(), 3u);
    EXPECT_TRUE(segment_sentences("").empty());
    EXPECT_TRUE(segment_sentences("   \n ").empty());
    EXPECT_EQ(split_sentences("Dr. Smith ran. He won."), (std::vector<std::string>{"Dr. Smith ran.", "He won."}));
}

TEST(Sentences, HandSegmentedFixture) {
    std::ifstream in(data_path("sentences_hand_segmented.txt"));
    ASSERT_TRUE(in) << "missing fixture";
    std::vector<std::vector<std::string>> passages(1);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) {
            if (!passages.back().empty()) passages.emplace_back();
            continue;
        }
        passages.back().push_back(line);
    }
    if (passages.back().empty()) passages.pop_back();
    std::size_t total = 0;
    for (const auto& expected : passages) {
        std::string joined;
        for (const auto& s : expected) joined += (joined.empty() ? "" : " ") + s;
        EXPECT_EQ(split_sentences(joined), expected) << joined;
        total += expected.size();
    }
    EXPECT_GE(total, 50u);
}

TEST(Sentences, SpansAreOrderedDisjointAndCoverText) {
    const std::string t = "  First one.  Second \"quoted.\"  Third?! Fourth\n\nFifth line without stop";
    const auto spans = segment_sentences(t);
    ASSERT_EQ(spans.size(), 5u);
    std::string covered(t.size(), ' ');
    std::size_t prev_end = 0;
    for (const auto& s : spans) {
        EXPECT_LE(prev_end, s.begin);
        EXPECT_LT(s.begin, s.end);
        prev_end = s.end;
        for (std::size_t i = s.begin; i < s.end; ++i) covered[i] = t[i];
    }
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!text::is_space(t[i])) EXPECT_EQ(covered[i], t[i]) << "byte " << i << " not covered";
}

TEST(Sentences, LastSentencesWindow) {
    EXPECT_EQ(last_sentences("X. Y. Z."), "Y. Z.");
    EXPECT_EQ(last_sentences("Only one."), "Only one.");
    EXPECT_EQ(last_sentences(""), "");
    EXPECT_EQ(last_sentences("A one. B two. C three.", 3), "A one. B two. C three.");
}

// ---- extraction ---------------------------------------------------------

TEST(Extract, ProviderKinds) {
    EXPECT_EQ(kind_of(Provider::OpenAI), FormatKind::Marker);
    EXPECT_EQ(kind_of(Provider::XAI), FormatKind::Marker);
    EXPECT_EQ(kind_of(Provider::Perplexity), FormatKind::Marker);
    EXPECT_EQ(kind_of(Provider::Anthropic), FormatKind::Block);
    EXPECT_EQ(kind_of(Provider::Google), FormatKind::Block);
    EXPECT_EQ(parse_provider("Gemini"), Provider::Google);
    EXPECT_FALSE(parse_provider("mistral"));
}

TEST(Extract, PerplexityWindow) {
    const auto out = extract_citations(raw(Provider::Perplexity, "S1. S2.[1] S3.", {{"citations", {"https://u1.example/"}}}));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].cited_sentence, "S1. S2.");
    EXPECT_EQ(out[0].source_url, "https://u1.example/");
}

TEST(Extract, AnthropicBlockWindow) {
    json payload = {{"citations", {{{"url", "https://u.example/"}, {"cited_text", "X. Y. Z."}}}}};
    const auto out = extract_citations(raw(Provider::Anthropic, "", payload));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].cited_sentence, "Y. Z.");
}

TEST(Extract, ZeroMarkersGiveEmptyList) {
    ExtractStats st;
    EXPECT_TRUE(extract_citations(raw(Provider::Perplexity, "No markers here.", {{"citations", json::array()}}), {}, &st).empty());
    EXPECT_TRUE(extract_citations(raw(Provider::OpenAI, "Plain.", json()), {}, &st).empty());
    EXPECT_EQ(st.responses_without_citations, 2u);
}

TEST(Extract, BlockProvidersIgnoreBody) {
    json payload = {{"citations", {{{"url", "https://u.example/"}, {"cited_text", "Block text here."}}}}};
    const auto a = extract_citations(raw(Provider::Anthropic, "Body one.", payload));
    const auto b = extract_citations(raw(Provider::Anthropic, "Totally different body [1].", payload));
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].cited_sentence, b[0].cited_sentence);
}

TEST(Extract, MalformedMarkersAreSkippedAndCounted) {
    ExtractStats st;
    json ann = {{"annotations",
                 {{{"start_index", 3}, {"end_index", 999}, {"url", "https://a.example/"}},
                  {{"start_index", 0}, {"end_index", 0}},
                  {{"start_index", 6}, {"end_index", 6}, {"url", "notaurl"}},
                  {{"start_index", 11}, {"end_index", 11}, {"url", "https://ok.example/"}}}}};
    const auto out = extract_citations(raw(Provider::OpenAI, "One. Two ok.", ann), {}, &st);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].cited_sentence, "One. Two ok");
    EXPECT_EQ(st.malformed_citations, 3u);
    EXPECT_EQ(st.invalid_urls, 1u);
}

TEST(Extract, WrongPayloadShapeSkipsRecord) {
    ExtractStats st;
    const auto out = extract_citations(raw(Provider::Google, "", {{"grounding_supports", "oops"}}), {}, &st);
    EXPECT_TRUE(out.empty());
    EXPECT_EQ(st.malformed_responses, 1u);
}

TEST(Extract, CountConservation) {
    // Every well-formed marker yields exactly one pair, duplicates included.
    json payload = {{"citations", {"https://a.example/", "https://b.example/"}}};
    ExtractStats st;
    const auto out =
        extract_citations(raw(Provider::Perplexity, "Claim one.[1] Claim two.[1][2] Claim one.[1]", payload), {}, &st);
    EXPECT_EQ(out.size(), 4u);
    EXPECT_EQ(st.citations, 4u);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].ordinal, i);
}

TEST(Extract, DeterministicOutput) {
    std::ifstream in1(data_path("extract/responses.jsonl"));
    std::ifstream in2(data_path("extract/responses.jsonl"));
    const auto a = extract_jsonl(in1);
    const auto b = extract_jsonl(in2);
    ASSERT_EQ(a.citations.size(), b.citations.size());
    for (std::size_t i = 0; i < a.citations.size(); ++i) EXPECT_EQ(to_json(a.citations[i]), to_json(b.citations[i]));
}

TEST(Extract, GoldenFixtureAllProviders) {
    std::ifstream in(data_path("extract/responses.jsonl"));
    ASSERT_TRUE(in);
    const auto res = extract_jsonl(in);
    std::ifstream exp(data_path("extract/expected.jsonl"));
    std::vector<json> expected;
    std::string line;
    while (std::getline(exp, line))
        if (!line.empty()) expected.push_back(json::parse(line));
    ASSERT_EQ(res.citations.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& c = res.citations[i];
        EXPECT_EQ(c.response_id, expected[i]["response_id"]) << i;
        EXPECT_EQ(c.ordinal, expected[i]["ordinal"].get<std::size_t>()) << i;
        EXPECT_EQ(c.cited_sentence, expected[i]["cited_sentence"]) << i;
        EXPECT_EQ(c.source_url, expected[i]["source_url"]) << i;
    }
    EXPECT_EQ(res.stats.responses, 9u);
    EXPECT_EQ(res.stats.malformed_responses, 1u);
    EXPECT_EQ(res.stats.malformed_citations, 1u);  // [2] with a single-entry citation list
    EXPECT_EQ(res.stats.responses_without_citations, 2u);
}

TEST(Extract, ForcedProvider) {
    std::istringstream in(R"({"response_id":"x","provider":"openai","body_text":"A one. B two.[1]","citation_payload":{"citations":["https://z.example/"]}})");
    ExtractOptions opt;
    opt.forced_provider = Provider::Perplexity;
    const auto res = extract_jsonl(in, opt);
    ASSERT_EQ(res.citations.size(), 1u);
    EXPECT_EQ(res.citations[0].provider, "perplexity");
}

TEST(Extract, JsonRoundTrip) {
    NormalizedCitation c;
    c.response_id = "r";
    c.ordinal = 4;
    c.cited_sentence = "S.";
    c.source_url = "https://a.example/";
    c.query_id = "Q1";
    const auto back = citation_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}
