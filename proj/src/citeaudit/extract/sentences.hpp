#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace citeaudit::extract {

// Half-open byte range into the segmented text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Span&) const = default;
};

// Rule-based splitter: a sentence ends at a run of . ! ? (plus any closing
// quotes or brackets) followed by whitespace and then an uppercase letter,
// digit or opening quote/bracket, or by the end of the text. A period after
// a stop-listed abbreviation or a single-letter initial does not end a sentence.
// Spans are trimmed, disjoint, ordered and cover every non-space byte.
std::vector<Span> segment_sentences(std::string_view text);

std::vector<std::string> split_sentences(std::string_view text);

// Text covering the last `count` sentences of `text` (all of them when fewer),
// copied verbatim from the start of the first to the end of the last.
std::string last_sentences(std::string_view text, std::size_t count = 2);

}  // namespace citeaudit::extract
