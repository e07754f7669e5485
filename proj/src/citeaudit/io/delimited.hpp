#pragma once

// RFC 4180 style delimited text: quoted fields may hold separators, quotes
// (doubled) and newlines. CRLF and LF line ends are both accepted.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace citeaudit::io {

struct DelimitedTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name, or -1.
    int column(std::string_view name) const noexcept;
};

// '\t' for .tsv/.tab, ',' otherwise.
char separator_for(const std::filesystem::path& path);

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char sep);

// First record is the header. Throws SchemaMismatch on an empty input or a
// row whose width differs from the header.
DelimitedTable parse_table(std::string_view text, char sep);
DelimitedTable read_table(const std::filesystem::path& path);

// Quotes only when the field needs it.
std::string format_field(std::string_view field, char sep);
void write_row(std::ostream& out, const std::vector<std::string>& fields, char sep);

std::string read_file(const std::filesystem::path& path);  // IoError
void write_file(const std::filesystem::path& path, std::string_view data);  // IoError; creates parents

}  // namespace citeaudit::io
