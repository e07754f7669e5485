#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace citeaudit::text {

// Number of Unicode scalar values in a UTF-8 string. Invalid bytes count as
// one scalar each.
std::size_t utf8_length(std::string_view s) noexcept;

// Byte offset of the given scalar index (clamped to s.size()).
std::size_t utf8_byte_offset(std::string_view s, std::size_t scalar_index) noexcept;

// Prefix holding at most max_scalars scalar values; never splits a sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_scalars) noexcept;

void append_utf8(std::string& out, char32_t cp);

bool is_space(char c) noexcept;
std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix) noexcept;
bool contains_ci(std::string_view haystack, std::string_view needle) noexcept;

// Collapses runs of whitespace to one space; preserves single '\n' breaks when
// keep_newlines is set.
std::string collapse_whitespace(std::string_view s, bool keep_newlines = false);

std::vector<std::string> split(std::string_view s, char sep);

std::string format_fixed(double value, int decimals);

}  // namespace citeaudit::text
