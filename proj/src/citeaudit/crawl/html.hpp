#pragma once

// Small tolerant HTML parser and main-text extraction.

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace citeaudit::crawl {

struct HtmlNode {
    std::string tag;  // lowercase; empty for text nodes
    std::vector<std::pair<std::string, std::string>> attrs;
    std::string text;  // text nodes only, entities decoded
    std::vector<std::unique_ptr<HtmlNode>> children;
    HtmlNode* parent = nullptr;

    bool is_text() const noexcept { return tag.empty(); }
    std::string_view attr(std::string_view name) const noexcept;
};

// Never throws on malformed markup; unknown end tags are ignored and open
// elements are closed at end of input.
std::unique_ptr<HtmlNode> parse_html(std::string_view html);

std::string decode_entities(std::string_view s);

// innerText-like rendering: block boundaries become newlines, whitespace is
// collapsed, empty lines dropped. Hidden subtrees (script, style, ...) skipped.
std::string visible_text(const HtmlNode& node, bool skip_boilerplate = false);

enum class ExtractionMethod { Structural, Readability, VisibleText, PlainText };

std::string_view to_string(ExtractionMethod m) noexcept;

struct ExtractedText {
    std::string text;
    ExtractionMethod method = ExtractionMethod::VisibleText;
    std::string title;
    double link_density = 0.0;  // share of visible characters inside <a>
};

// Fallback chain: structural container (article / main / role=main), then
// readability-style paragraph scoring, then all visible text. The first
// non-empty result wins.
ExtractedText extract_main_text_html(std::string_view html);

// Dispatches on content type and magic bytes. PDF / Office / binary payloads
// throw UnsupportedFormat; text/plain passes through.
ExtractedText extract_main_text(std::string_view body, std::string_view content_type = "text/html");

bool is_unsupported_format(std::string_view body, std::string_view content_type);

}  // namespace citeaudit::crawl
