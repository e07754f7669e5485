#include "citeaudit/extract/extractor.hpp"

#include <algorithm>
#include <istream>
#include <regex>
#include <set>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/extract/sentences.hpp"
#include "citeaudit/extract/url.hpp"

namespace citeaudit::extract {

using nlohmann::json;

FormatKind kind_of(Provider p) noexcept {
    return (p == Provider::Anthropic || p == Provider::Google) ? FormatKind::Block : FormatKind::Marker;
}

std::string_view to_string(Provider p) noexcept {
    switch (p) {
        case Provider::OpenAI: return "openai";
        case Provider::XAI: return "xai";
        case Provider::Perplexity: return "perplexity";
        case Provider::Anthropic: return "anthropic";
        case Provider::Google: return "google";
    }
    return "openai";
}

std::optional<Provider> parse_provider(std::string_view name) noexcept {
    const std::string n = text::to_lower(text::trim(name));
    if (n == "openai") return Provider::OpenAI;
    if (n == "xai" || n == "grok") return Provider::XAI;
    if (n == "perplexity") return Provider::Perplexity;
    if (n == "anthropic") return Provider::Anthropic;
    if (n == "google" || n == "gemini") return Provider::Google;
    return std::nullopt;
}

json to_json(const NormalizedCitation& c) {
    return json{{"response_id", c.response_id}, {"ordinal", c.ordinal},   {"cited_sentence", c.cited_sentence},
                {"source_url", c.source_url},   {"raw_url", c.raw_url},   {"query_id", c.query_id},
                {"query", c.query},             {"model", c.model},       {"provider", c.provider},
                {"site", c.site},               {"category", c.category}};
}

NormalizedCitation citation_from_json(const json& j) {
    NormalizedCitation c;
    try {
        c.response_id = j.at("response_id").get<std::string>();
        c.ordinal = j.value("ordinal", std::size_t{0});
        c.cited_sentence = j.at("cited_sentence").get<std::string>();
        c.source_url = j.at("source_url").get<std::string>();
        c.raw_url = j.value("raw_url", c.source_url);
        c.query_id = j.value("query_id", "");
        c.query = j.value("query", "");
        c.model = j.value("model", "");
        c.provider = j.value("provider", "");
        c.site = j.value("site", "");
        c.category = j.value("category", "");
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaMismatch, std::string("citation record: ") + e.what());
    }
    return c;
}

void ExtractStats::merge(const ExtractStats& o) {
    responses += o.responses;
    responses_without_citations += o.responses_without_citations;
    malformed_responses += o.malformed_responses;
    malformed_citations += o.malformed_citations;
    invalid_urls += o.invalid_urls;
    duplicate_pairs += o.duplicate_pairs;
    citations += o.citations;
    for (const auto& i : o.issues)
        if (issues.size() < 50) issues.push_back(i);
}

json to_json(const ExtractStats& s) {
    return json{{"responses", s.responses},
                {"responses_without_citations", s.responses_without_citations},
                {"malformed_responses", s.malformed_responses},
                {"malformed_citations", s.malformed_citations},
                {"invalid_urls", s.invalid_urls},
                {"duplicate_pairs_emitted", s.duplicate_pairs},
                {"citations", s.citations},
                {"issues", s.issues}};
}

namespace {

std::string optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number()) return it->dump();
    fail(ErrorCode::MalformedPayload, std::string("field '") + key + "' must be a string");
}

// First present key among the alternatives.
const json* find_any(const json& j, std::initializer_list<const char*> keys) {
    if (!j.is_object()) return nullptr;
    for (const char* k : keys) {
        auto it = j.find(k);
        if (it != j.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

struct Collector {
    const RawResponse& raw;
    const ExtractOptions& options;
    ExtractStats& stats;
    std::vector<NormalizedCitation> out;
    std::set<std::pair<std::string, std::string>> seen;

    void problem(const std::string& what) {
        ++stats.malformed_citations;
        if (stats.issues.size() < 50) stats.issues.push_back(raw.response_id + ": " + what);
    }

    void emit(std::string sentence, const std::string& url) {
        const auto trimmed = text::trim(sentence);
        if (trimmed.empty()) {
            problem("empty citation window");
            return;
        }
        std::string canonical;
        try {
            canonical = options.tracking_params.empty() ? canonicalize_url(url)
                                                        : canonicalize_url(url, options.tracking_params);
        } catch (const Error&) {
            ++stats.invalid_urls;
            problem("invalid URL '" + url + "'");
            return;
        }
        NormalizedCitation c;
        c.response_id = raw.response_id;
        c.ordinal = out.size();
        c.cited_sentence = std::string(trimmed);
        c.source_url = canonical;
        c.raw_url = url;
        c.query_id = raw.query_id;
        c.query = raw.query;
        c.model = raw.model;
        c.provider = std::string(to_string(raw.provider));
        c.site = raw.site;
        c.category = raw.category;
        if (!seen.emplace(c.cited_sentence, c.source_url).second) ++stats.duplicate_pairs;
        out.push_back(std::move(c));
    }
};

struct Marker {
    std::size_t start = 0;  // byte offsets into body_text
    std::size_t end = 0;
    std::string url;
    std::size_t order = 0;
};

// Removes every marker span and cites the last sentences before each marker.
// Markers without a URL are stripped but not emitted.
void emit_markers(Collector& col, const std::string& body, std::vector<Marker> markers) {
    std::stable_sort(markers.begin(), markers.end(), [](const Marker& a, const Marker& b) { return a.start < b.start; });
    // Union of marker spans.
    std::vector<std::pair<std::size_t, std::size_t>> removed;
    for (const auto& m : markers) {
        if (!removed.empty() && m.start <= removed.back().second)
            removed.back().second = std::max(removed.back().second, m.end);
        else
            removed.emplace_back(m.start, m.end);
    }
    std::string clean;
    std::size_t pos = 0;
    for (const auto& [s, e] : removed) {
        clean.append(body, pos, s - pos);
        pos = e;
    }
    clean.append(body, pos, std::string::npos);

    for (const auto& m : markers) {
        std::size_t shift = 0;
        for (const auto& [s, e] : removed) {
            if (s >= m.start) break;
            shift += std::min(e, m.start) - s;
        }
        if (m.url.empty()) continue;
        const std::size_t at = m.start - shift;
        col.emit(last_sentences(std::string_view(clean).substr(0, at), col.options.window), m.url);
    }
}

std::string url_of(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (const json* u = find_any(j, {"url", "uri"}); u && u->is_string()) return u->get<std::string>();
    return {};
}

void extract_annotations(Collector& col) {
    const json& payload = col.raw.citation_payload;
    const json* list = payload.is_array() ? &payload : find_any(payload, {"annotations"});
    if (!list) return;
    if (!list->is_array()) fail(ErrorCode::MalformedPayload, "annotations must be an array");
    const std::string& body = col.raw.body_text;
    const std::size_t length = text::utf8_length(body);
    std::vector<Marker> markers;
    std::size_t order = 0;
    for (const auto& a : *list) {
        const json& inner = (a.is_object() && a.contains("url_citation")) ? a["url_citation"] : a;
        const json* s = find_any(inner, {"start_index"});
        const json* e = find_any(inner, {"end_index"});
        const std::string url = url_of(inner);
        if (!s || !e || !s->is_number_integer() || !e->is_number_integer()) {
            col.problem("annotation without integer start_index/end_index");
            continue;
        }
        if (url.empty()) {
            col.problem("annotation without url");
            continue;
        }
        const auto si = s->get<long long>();
        const auto ei = e->get<long long>();
        if (si < 0 || ei < si || static_cast<std::size_t>(ei) > length) {
            col.problem("annotation indices out of range");
            continue;
        }
        markers.push_back({text::utf8_byte_offset(body, static_cast<std::size_t>(si)),
                           text::utf8_byte_offset(body, static_cast<std::size_t>(ei)), url, order++});
    }
    emit_markers(col, body, std::move(markers));
}

void extract_numbered_markers(Collector& col) {
    const json& payload = col.raw.citation_payload;
    std::vector<std::string> urls;
    const json* list = payload.is_array() ? &payload : find_any(payload, {"citations", "search_results"});
    if (list) {
        if (!list->is_array()) fail(ErrorCode::MalformedPayload, "citations must be an array");
        for (const auto& c : *list) urls.push_back(url_of(c));
    }
    static const std::regex marker(R"(\[(\d{1,4})\])");
    const std::string& body = col.raw.body_text;
    std::vector<Marker> markers;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), marker); it != std::sregex_iterator(); ++it) {
        const auto start = static_cast<std::size_t>(it->position(0));
        const auto end = start + static_cast<std::size_t>(it->length(0));
        const long n = std::stol((*it)[1].str());
        if (n < 1 || static_cast<std::size_t>(n) > urls.size() || urls[n - 1].empty()) {
            col.problem("marker [" + std::to_string(n) + "] has no matching citation URL");
            // still stripped from the text so it does not leak into other windows
            markers.push_back({start, end, {}, markers.size()});
            continue;
        }
        markers.push_back({start, end, urls[n - 1], markers.size()});
    }
    emit_markers(col, body, std::move(markers));
}

void extract_anthropic(Collector& col) {
    const json& payload = col.raw.citation_payload;
    std::vector<const json*> citations;
    auto collect = [&](const json& list) {
        if (!list.is_array()) fail(ErrorCode::MalformedPayload, "citations must be an array");
        for (const auto& c : list) citations.push_back(&c);
    };
    if (payload.is_array()) {
        collect(payload);
    } else if (const json* content = find_any(payload, {"content"})) {
        if (!content->is_array()) fail(ErrorCode::MalformedPayload, "content must be an array");
        for (const auto& block : *content)
            if (const json* c = find_any(block, {"citations"})) collect(*c);
    } else if (const json* c = find_any(payload, {"citations"})) {
        collect(*c);
    }
    for (const json* c : citations) {
        const json* cited = find_any(*c, {"cited_text"});
        const std::string url = url_of(*c);
        if (!cited || !cited->is_string()) {
            col.problem("citation block without cited_text");
            continue;
        }
        if (url.empty()) {
            col.problem("citation block without url");
            continue;
        }
        col.emit(last_sentences(cited->get<std::string>(), col.options.window), url);
    }
}

void extract_google(Collector& col) {
    const json* root = &col.raw.citation_payload;
    if (const json* gm = find_any(*root, {"grounding_metadata", "groundingMetadata"})) root = gm;
    const json* chunks = find_any(*root, {"grounding_chunks", "groundingChunks"});
    const json* supports = find_any(*root, {"grounding_supports", "groundingSupports"});
    if (!supports) return;
    if (!supports->is_array() || (chunks && !chunks->is_array()))
        fail(ErrorCode::MalformedPayload, "grounding_supports/grounding_chunks must be arrays");
    std::vector<std::string> urls;
    if (chunks)
        for (const auto& ch : *chunks) {
            const json* web = find_any(ch, {"web", "retrieved_context", "retrievedContext"});
            urls.push_back(web ? url_of(*web) : std::string());
        }
    for (const auto& sup : *supports) {
        const json* seg = find_any(sup, {"segment"});
        const json* segtext = seg ? find_any(*seg, {"text"}) : nullptr;
        const json* idx = find_any(sup, {"grounding_chunk_indices", "groundingChunkIndices"});
        if (!segtext || !segtext->is_string()) {
            col.problem("grounding support without segment text");
            continue;
        }
        if (!idx || !idx->is_array()) {
            col.problem("grounding support without chunk indices");
            continue;
        }
        const std::string window = last_sentences(segtext->get<std::string>(), col.options.window);
        for (const auto& i : *idx) {
            if (!i.is_number_integer() || i.get<long long>() < 0 ||
                static_cast<std::size_t>(i.get<long long>()) >= urls.size() || urls[i.get<std::size_t>()].empty()) {
                col.problem("grounding chunk index out of range");
                continue;
            }
            col.emit(window, urls[i.get<std::size_t>()]);
        }
    }
}

}  // namespace

RawResponse parse_raw_response(const json& j, std::optional<Provider> forced) {
    if (!j.is_object()) fail(ErrorCode::MalformedPayload, "response record must be an object");
    RawResponse r;
    r.response_id = optional_string(j, "response_id");
    if (r.response_id.empty()) fail(ErrorCode::MalformedPayload, "response_id missing");
    if (forced) {
        r.provider = *forced;
    } else {
        const std::string p = optional_string(j, "provider");
        auto parsed = parse_provider(p);
        if (!parsed) fail(ErrorCode::MalformedPayload, "unknown provider '" + p + "' in " + r.response_id);
        r.provider = *parsed;
    }
    r.body_text = optional_string(j, "body_text");
    if (auto it = j.find("citation_payload"); it != j.end()) r.citation_payload = *it;
    r.query_id = optional_string(j, "query_id");
    r.query = optional_string(j, "query");
    r.model = optional_string(j, "model");
    r.site = optional_string(j, "site");
    r.category = optional_string(j, "category");
    return r;
}

std::vector<NormalizedCitation> extract_citations(const RawResponse& raw, const ExtractOptions& options,
                                                  ExtractStats* stats) {
    ExtractStats local;
    ExtractStats& st = stats ? *stats : local;
    ++st.responses;
    Collector col{raw, options, st, {}, {}};
    const std::uint64_t before = st.malformed_citations;
    try {
        if (!raw.citation_payload.is_null()) {
            switch (raw.provider) {
                case Provider::OpenAI:
                case Provider::XAI: extract_annotations(col); break;
                case Provider::Perplexity: extract_numbered_markers(col); break;
                case Provider::Anthropic: extract_anthropic(col); break;
                case Provider::Google: extract_google(col); break;
            }
        }
    } catch (const std::exception& e) {
        // Shape errors invalidate the whole record.
        st.malformed_citations = before;
        ++st.malformed_responses;
        if (st.issues.size() < 50) st.issues.push_back(raw.response_id + ": " + e.what());
        return {};
    }
    if (col.out.empty() && st.malformed_citations == before) ++st.responses_without_citations;
    st.citations += col.out.size();
    return std::move(col.out);
}

ExtractResult extract_jsonl(std::istream& in, const ExtractOptions& options) {
    ExtractResult res;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        RawResponse raw;
        try {
            raw = parse_raw_response(json::parse(line), options.forced_provider);
        } catch (const std::exception& e) {
            ++res.stats.responses;
            ++res.stats.malformed_responses;
            if (res.stats.issues.size() < 50)
                res.stats.issues.push_back("line " + std::to_string(line_no) + ": " + e.what());
            continue;
        }
        auto cites = extract_citations(raw, options, &res.stats);
        for (auto& c : cites) res.citations.push_back(std::move(c));
    }
    return res;
}

}  // namespace citeaudit::extract
