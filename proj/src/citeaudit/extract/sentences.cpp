#include "citeaudit/extract/sentences.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "citeaudit/common/text.hpp"

namespace citeaudit::extract {

namespace {

constexpr std::array<std::string_view, 33> kAbbreviations = {
    "mr",  "mrs", "ms",  "dr",  "prof", "sr",  "jr",  "st",  "mt",   "vs",   "cf",
    "al",  "approx", "ed", "eds", "inc", "ltd", "co", "corp", "dept", "est",  "jan",
    "feb", "mar", "apr", "jun", "jul",  "aug", "sep", "sept", "oct",  "nov",  "ph"};
// "dec" and "gen" are left out: both are common sentence-final words.

// Abbreviations that only precede a number ("No. 5", "Fig. 2").
constexpr std::array<std::string_view, 6> kNumberAbbreviations = {"no", "nos", "fig", "figs", "vol", "pp"};

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket at i, 0 if none.
std::size_t closer_len(std::string_view t, std::size_t i) {
    const char c = t[i];
    if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') return 1;
    // U+201D, U+2019 right quotes; U+00BB right guillemet
    if (t.compare(i, 3, "\xE2\x80\x9D") == 0 || t.compare(i, 3, "\xE2\x80\x99") == 0) return 3;
    if (t.compare(i, 2, "\xC2\xBB") == 0) return 2;
    return 0;
}

bool starts_sentence(std::string_view t, std::size_t k) {
    const auto u = static_cast<unsigned char>(t[k]);
    if (std::isupper(u) || std::isdigit(u)) return true;
    if (t[k] == '"' || t[k] == '\'' || t[k] == '(' || t[k] == '[') return true;
    if (t.compare(k, 3, "\xE2\x80\x9C") == 0 || t.compare(k, 3, "\xE2\x80\x98") == 0) return true;
    // Non-ASCII letters are taken as possible sentence starts.
    return u >= 0xC0;
}

// `next` is the first non-space byte after the period.
bool is_abbreviation(std::string_view t, std::size_t start, std::size_t dot, std::size_t next) {
    std::size_t b = dot;
    while (b > start && !text::is_space(t[b - 1])) --b;
    std::string_view token = t.substr(b, dot - b);
    while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\'' || token.front() == '['))
        token.remove_prefix(1);
    if (token.empty()) return false;
    if (token.size() == 1) {
        // An initial only when a capitalized word follows ("J. Smith", not "A. B.")
        // and the letter is not a unit after a number ("180 C.").
        if (!std::isalpha(static_cast<unsigned char>(token[0])) || next + 1 >= t.size()) return false;
        if (!std::isupper(static_cast<unsigned char>(t[next])) || !std::islower(static_cast<unsigned char>(t[next + 1])))
            return false;
        std::size_t p = b;
        while (p > start && text::is_space(t[p - 1])) --p;
        return p == start || !std::isdigit(static_cast<unsigned char>(t[p - 1]));
    }
    const std::string lower = text::to_lower(token);
    if (std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end()) return true;
    if (std::find(kNumberAbbreviations.begin(), kNumberAbbreviations.end(), lower) != kNumberAbbreviations.end())
        return std::isdigit(static_cast<unsigned char>(t[next])) != 0;
    // dotted initialisms: "U.S", "e.g", "i.e", "Ph.D"
    bool dotted = lower.find('.') != std::string::npos;
    for (std::size_t i = 0; dotted && i < lower.size(); ++i) {
        const bool letter = std::isalpha(static_cast<unsigned char>(lower[i])) != 0;
        if (!letter && lower[i] != '.') dotted = false;
        if (lower[i] == '.' && (i == 0 || lower[i - 1] == '.')) dotted = false;
    }
    return dotted;
}

std::size_t skip_space(std::string_view t, std::size_t i) {
    while (i < t.size() && text::is_space(t[i])) ++i;
    return i;
}

std::size_t trim_back(std::string_view t, std::size_t begin, std::size_t end) {
    while (end > begin && text::is_space(t[end - 1])) --end;
    return end;
}

}  // namespace

std::vector<Span> segment_sentences(std::string_view t) {
    std::vector<Span> spans;
    const std::size_t n = t.size();
    std::size_t start = skip_space(t, 0);
    std::size_t i = start;
    auto close = [&](std::size_t end, std::size_t next) {
        end = trim_back(t, start, end);
        if (end > start) spans.push_back({start, end});
        start = skip_space(t, next);
        i = start;
    };
    while (i < n) {
        if (is_terminator(t[i])) {
            std::size_t j = i;
            while (j < n && is_terminator(t[j])) ++j;
            const bool single_period = t[i] == '.' && j == i + 1;
            while (j < n) {
                const std::size_t len = closer_len(t, j);
                if (len == 0) break;
                j += len;
            }
            bool boundary = false;
            if (j >= n) {
                boundary = true;
            } else if (text::is_space(t[j])) {
                const std::size_t k = skip_space(t, j);
                if (k >= n) boundary = true;
                else if (starts_sentence(t, k)) boundary = !(single_period && is_abbreviation(t, start, i, k));
            }
            if (boundary) {
                close(j, j);
                continue;
            }
            i = j;
            continue;
        }
        if (t[i] == '\n') {
            // A blank line ends a sentence even without punctuation.
            std::size_t k = i + 1;
            while (k < n && (t[k] == ' ' || t[k] == '\t' || t[k] == '\r')) ++k;
            if (k < n && t[k] == '\n') {
                close(i, k);
                continue;
            }
        }
        ++i;
    }
    if (start < n) close(n, n);
    return spans;
}

std::vector<std::string> split_sentences(std::string_view t) {
    std::vector<std::string> out;
    for (const auto& s : segment_sentences(t)) out.emplace_back(t.substr(s.begin, s.end - s.begin));
    return out;
}

std::string last_sentences(std::string_view t, std::size_t count) {
    const auto spans = segment_sentences(t);
    if (spans.empty() || count == 0) return {};
    const std::size_t first = spans.size() > count ? spans.size() - count : 0;
    return std::string(t.substr(spans[first].begin, spans.back().end - spans[first].begin));
}

}  // namespace citeaudit::extract
