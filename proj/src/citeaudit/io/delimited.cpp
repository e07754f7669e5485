#include "citeaudit/io/delimited.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "citeaudit/common/error.hpp"

namespace citeaudit::io {

int DelimitedTable::column(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

char separator_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".tsv" || ext == ".tab") ? '\t' : ',';
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char sep) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        // a bare blank line is not a record
        if (!(row.size() == 1 && row[0].empty())) out.push_back(std::move(row));
        row.clear();
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
            } else {
                field += c;
            }
            ++i;
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == sep) {
            end_field();
        } else if (c == '\n' || c == '\r') {
            end_row();
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (quoted) fail(ErrorCode::SchemaMismatch, "unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return out;
}

DelimitedTable parse_table(std::string_view text, char sep) {
    auto records = parse_delimited(text, sep);
    if (records.empty()) fail(ErrorCode::SchemaMismatch, "no header row");
    DelimitedTable t;
    t.header = std::move(records.front());
    if (!t.header.empty() && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.header.size())
            fail(ErrorCode::SchemaMismatch, "record " + std::to_string(r) + " has " +
                                                std::to_string(records[r].size()) + " fields, header has " +
                                                std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

DelimitedTable read_table(const std::filesystem::path& path) {
    return parse_table(read_file(path), separator_for(path));
}

std::string format_field(std::string_view f, char sep) {
    const bool needs = f.find_first_of(std::string{sep, '"', '\n', '\r'}) != std::string_view::npos;
    if (!needs) return std::string(f);
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char sep) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << sep;
        out << format_field(fields[i], sep);
    }
    out << '\n';
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorCode::Io, "read failed: " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace citeaudit::io
