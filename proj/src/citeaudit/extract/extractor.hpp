#pragma once

// Provider-specific citation parsing, normalized to (cited_sentence, source_url).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace citeaudit::extract {

enum class Provider { OpenAI, XAI, Perplexity, Anthropic, Google };
enum class FormatKind { Marker, Block };

FormatKind kind_of(Provider p) noexcept;
std::string_view to_string(Provider p) noexcept;
// Case-insensitive; also accepts "grok" and "gemini".
std::optional<Provider> parse_provider(std::string_view name) noexcept;

struct RawResponse {
    std::string response_id;
    Provider provider = Provider::OpenAI;
    std::string body_text;
    nlohmann::json citation_payload;
    // Pass-through metadata; any may be empty.
    std::string query_id;
    std::string query;
    std::string model;
    std::string site;
    std::string category;
};

struct NormalizedCitation {
    std::string response_id;
    std::size_t ordinal = 0;
    std::string cited_sentence;
    std::string source_url;  // canonical
    std::string raw_url;
    std::string query_id;
    std::string query;
    std::string model;
    std::string provider;
    std::string site;
    std::string category;
};

nlohmann::json to_json(const NormalizedCitation& c);
NormalizedCitation citation_from_json(const nlohmann::json& j);

struct ExtractOptions {
    std::vector<std::string> tracking_params;  // empty = defaults
    std::optional<Provider> forced_provider;
    std::size_t window = 2;
};

struct ExtractStats {
    std::uint64_t responses = 0;
    std::uint64_t responses_without_citations = 0;
    std::uint64_t malformed_responses = 0;   // whole record skipped
    std::uint64_t malformed_citations = 0;   // single marker/block skipped
    std::uint64_t invalid_urls = 0;          // counted within malformed_citations
    std::uint64_t duplicate_pairs = 0;       // repeated (sentence, url) within one response; still emitted
    std::uint64_t citations = 0;
    std::vector<std::string> issues;         // first few problems, for the report

    void merge(const ExtractStats& o);
};

nlohmann::json to_json(const ExtractStats& s);

// Throws MalformedPayload when required fields are missing or mistyped.
RawResponse parse_raw_response(const nlohmann::json& j, std::optional<Provider> forced = std::nullopt);

// Never throws on payload defects: bad markers/blocks are skipped and counted.
std::vector<NormalizedCitation> extract_citations(const RawResponse& raw, const ExtractOptions& options = {},
                                                  ExtractStats* stats = nullptr);

struct ExtractResult {
    std::vector<NormalizedCitation> citations;
    ExtractStats stats;
};

// One JSON object per line; blank lines ignored; unparseable lines counted as malformed.
ExtractResult extract_jsonl(std::istream& in, const ExtractOptions& options = {});

}  // namespace citeaudit::extract
