#include "citeaudit/io/master.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/io/delimited.hpp"
#include "citeaudit/io/parquet.hpp"

namespace citeaudit::io {

using namespace taxonomy;

namespace {

enum Col {
    kCitId,
    kQueryId,
    kSite,
    kCategory,
    kModel,
    kProvider,
    kSentence,
    kUrlId,
    kSourceUrl,
    kClen,
    kCitedLen,
    kCrawlYn,
    kQi,
    kSp,
    kAsf,
    kSd,
    kSt,
    kIpam,
    kAsfScore,
    kSsm,
    kColumnCount
};

bool is_int_column(int c) {
    return c == kCitId || c == kClen || c == kCitedLen || c == kIpam || c == kAsfScore || c == kSsm;
}

template <typename R>
auto int_slot(R& r, int c) -> decltype(&r.cit_id) {
    switch (c) {
        case kCitId: return &r.cit_id;
        case kClen: return &r.clen;
        case kCitedLen: return &r.cited_len;
        case kIpam: return &r.ipam_score;
        case kAsfScore: return &r.asf_score;
        case kSsm: return &r.ssm_score;
        default: return nullptr;
    }
}

template <typename R>
auto str_slot(R& r, int c) -> decltype(&r.query_id) {
    switch (c) {
        case kQueryId: return &r.query_id;
        case kSite: return &r.site;
        case kCategory: return &r.category;
        case kModel: return &r.model_short;
        case kProvider: return &r.provider;
        case kSentence: return &r.cited_sentence;
        case kUrlId: return &r.url_id;
        case kSourceUrl: return &r.source_url;
        case kCrawlYn: return &r.crawl_yn;
        case kQi: return &r.qi_label;
        case kSp: return &r.sp_label;
        case kAsf: return &r.asf_label;
        case kSd: return &r.sd_label;
        case kSt: return &r.st_label;
        default: return nullptr;
    }
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    s = text::trim(s);
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec == std::errc() && p == end && !s.empty()) return v;
    // integral floats such as "3.0" (columns that passed through a float dtype)
    double d = 0.0;
    auto [q, ec2] = std::from_chars(s.data(), end, d);
    if (ec2 == std::errc() && q == end && !s.empty() && std::floor(d) == d && std::abs(d) < 9e15)
        return static_cast<std::int64_t>(d);
    return std::nullopt;
}

// Builds a record from textual cells; type problems are appended to `problems`.
MasterRecord record_from_cells(const std::vector<const std::string*>& cells, std::vector<std::string>& problems) {
    MasterRecord r;
    const auto& names = master_columns();
    for (int c = 0; c < kColumnCount; ++c) {
        const std::string& v = *cells[static_cast<std::size_t>(c)];
        if (is_int_column(c)) {
            if (auto n = parse_int(v))
                *int_slot(r, c) = *n;
            else
                problems.push_back(names[static_cast<std::size_t>(c)] + ": not an integer (\"" + v + "\")");
        } else {
            *str_slot(r, c) = v;
        }
    }
    return r;
}

void finish_row(MasterRecord r, std::vector<std::string> problems, std::size_t row, bool cit_id_ok,
                const MasterReadOptions& options, MasterReadResult& out) {
    ++out.rows_read;
    if (problems.empty()) problems = validate_record(r, options.matrices);
    if (problems.empty()) {
        out.records.push_back(std::move(r));
        return;
    }
    RowViolation v;
    v.row = row;
    if (cit_id_ok) v.cit_id = r.cit_id;
    v.problems = std::move(problems);
    if (options.strict) {
        std::string msg = "row " + std::to_string(row);
        if (v.cit_id) msg += " (cit_id " + std::to_string(*v.cit_id) + ")";
        msg += ": " + v.problems.front();
        fail(ErrorCode::ValidationFailed, msg);
    }
    out.violations.push_back(std::move(v));
}

template <typename Label>
std::optional<Label> checked_label(const std::string& code, const char* column, std::vector<std::string>& problems) {
    auto l = parse_label<Label>(code);
    if (!l) problems.push_back(std::string(column) + ": invalid label \"" + code + "\"");
    return l;
}

}  // namespace

std::vector<std::string> validate_record(const MasterRecord& r, const MatrixSet& matrices) {
    std::vector<std::string> problems;
    const auto qi = checked_label<IntentLabel>(r.qi_label, "QI_label", problems);
    const auto sp = checked_label<PurposeLabel>(r.sp_label, "SP_label", problems);
    const auto asf = checked_label<FidelityLabel>(r.asf_label, "ASF_label", problems);
    const auto sd = checked_label<DomainLabel>(r.sd_label, "SD_label", problems);
    const auto st = checked_label<TypeLabel>(r.st_label, "ST_label", problems);
    if (qi && sp && r.ipam_score != matrices.ipa_score(*qi, *sp))
        problems.push_back("ipam_score " + std::to_string(r.ipam_score) + " != IPA[" + r.qi_label + "][" +
                           r.sp_label + "] = " + std::to_string(matrices.ipa_score(*qi, *sp)));
    if (sd && st && r.ssm_score != matrices.ss_score(*sd, *st))
        problems.push_back("ssm_score " + std::to_string(r.ssm_score) + " != SS[" + r.sd_label + "][" + r.st_label +
                           "] = " + std::to_string(matrices.ss_score(*sd, *st)));
    if (asf && r.asf_score != asf_score(*asf))
        problems.push_back("asf_score " + std::to_string(r.asf_score) + " != ordinal of " + r.asf_label);
    const auto len = static_cast<std::int64_t>(text::utf8_length(r.cited_sentence));
    if (r.cited_len != len)
        problems.push_back("cited_len " + std::to_string(r.cited_len) + " != sentence length " + std::to_string(len));
    if (r.crawl_yn != "Y") problems.push_back("crawl_yn is \"" + r.crawl_yn + "\", expected Y");
    return problems;
}

metrics::CitationLabels labels_of(const MasterRecord& r) {
    auto need = [](auto l, const std::string& code) {
        if (!l) fail(ErrorCode::InvalidLabel, "invalid label " + code);
        return *l;
    };
    return {need(parse_label<IntentLabel>(r.qi_label), r.qi_label),
            need(parse_label<PurposeLabel>(r.sp_label), r.sp_label),
            need(parse_label<DomainLabel>(r.sd_label), r.sd_label),
            need(parse_label<TypeLabel>(r.st_label), r.st_label),
            need(parse_label<FidelityLabel>(r.asf_label), r.asf_label)};
}

void derive_fields(MasterRecord& r, const MatrixSet& matrices) {
    const auto l = labels_of(r);
    r.cited_len = static_cast<std::int64_t>(text::utf8_length(r.cited_sentence));
    r.ipam_score = matrices.ipa_score(l.qi, l.sp);
    r.ssm_score = matrices.ss_score(l.sd, l.st);
    r.asf_score = asf_score(l.asf);
}

namespace {

template <typename J>
J record_json(const MasterRecord& r) {
    return J{{"cit_id", r.cit_id},
             {"query_id", r.query_id},
             {"site", r.site},
             {"category", r.category},
             {"model_short", r.model_short},
             {"provider", r.provider},
             {"cited_sentence", r.cited_sentence},
             {"url_id", r.url_id},
             {"source_url", r.source_url},
             {"clen", r.clen},
             {"cited_len", r.cited_len},
             {"crawl_yn", r.crawl_yn},
             {"QI_label", r.qi_label},
             {"SP_label", r.sp_label},
             {"ASF_label", r.asf_label},
             {"SD_label", r.sd_label},
             {"ST_label", r.st_label},
             {"ipam_score", r.ipam_score},
             {"asf_score", r.asf_score},
             {"ssm_score", r.ssm_score}};
}

}  // namespace

nlohmann::json to_json(const MasterRecord& r) { return record_json<nlohmann::json>(r); }

MasterRecord master_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::SchemaMismatch, "record is not an object");
    MasterRecord r;
    const auto& names = master_columns();
    for (int c = 0; c < kColumnCount; ++c) {
        const auto& name = names[static_cast<std::size_t>(c)];
        const auto it = j.find(name);
        if (it == j.end()) fail(ErrorCode::SchemaMismatch, "missing column " + name);
        if (is_int_column(c)) {
            if (it->is_number_integer()) {
                *int_slot(r, c) = it->get<std::int64_t>();
            } else if (it->is_number_float() && std::floor(it->get<double>()) == it->get<double>()) {
                *int_slot(r, c) = static_cast<std::int64_t>(it->get<double>());
            } else {
                fail(ErrorCode::SchemaMismatch, name + " is not an integer");
            }
        } else if (it->is_string()) {
            *str_slot(r, c) = it->get<std::string>();
        } else if (c == kCrawlYn && it->is_boolean()) {
            r.crawl_yn = it->get<bool>() ? "Y" : "N";
        } else {
            fail(ErrorCode::SchemaMismatch, name + " is not a string");
        }
    }
    return r;
}

std::vector<std::string> to_fields(const MasterRecord& r) {
    return {std::to_string(r.cit_id), r.query_id,   r.site,      r.category,   r.model_short,
            r.provider,               r.cited_sentence, r.url_id, r.source_url, std::to_string(r.clen),
            std::to_string(r.cited_len), r.crawl_yn, r.qi_label, r.sp_label,    r.asf_label,
            r.sd_label,               r.st_label,   std::to_string(r.ipam_score), std::to_string(r.asf_score),
            std::to_string(r.ssm_score)};
}

TableFormat format_for(const std::filesystem::path& path) {
    const auto ext = text::to_lower(path.extension().string());
    if (ext == ".parquet" || ext == ".pq") return TableFormat::Parquet;
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return TableFormat::Jsonl;
    if (ext == ".tsv" || ext == ".tab") return TableFormat::Tsv;
    return TableFormat::Csv;
}

nlohmann::json to_json(const RowViolation& v) {
    nlohmann::json j{{"row", v.row}, {"problems", v.problems}};
    j["cit_id"] = v.cit_id ? nlohmann::json(*v.cit_id) : nlohmann::json(nullptr);
    return j;
}

MasterReadResult parse_master_jsonl(std::string_view text, const MasterReadOptions& options) {
    MasterReadResult out;
    out.format = TableFormat::Jsonl;
    std::size_t row = 0;
    for (const auto& raw : text::split(text, '\n')) {
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        ++row;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            finish_row({}, {std::string("unparseable line: ") + e.what()}, row, false, options, out);
            continue;
        }
        // Missing keys are a schema problem for the whole file when on the first row.
        MasterRecord r;
        try {
            r = master_from_json(j);
        } catch (const Error& e) {
            if (row == 1) throw;
            const bool id_ok = j.is_object() && j.contains("cit_id") && j["cit_id"].is_number_integer();
            if (id_ok) r.cit_id = j["cit_id"].get<std::int64_t>();
            finish_row(r, {e.what()}, row, id_ok, options, out);
            continue;
        }
        finish_row(std::move(r), {}, row, true, options, out);
    }
    if (row == 0) fail(ErrorCode::SchemaMismatch, "no records");
    return out;
}

MasterReadResult parse_master_delimited(std::string_view text, char sep, const MasterReadOptions& options) {
    const auto table = parse_table(text, sep);
    std::vector<int> index;
    for (const auto& name : master_columns()) {
        const int k = table.column(name);
        if (k < 0) fail(ErrorCode::SchemaMismatch, "missing column " + name);
        index.push_back(k);
    }
    MasterReadResult out;
    out.format = sep == '\t' ? TableFormat::Tsv : TableFormat::Csv;
    std::vector<const std::string*> cells(kColumnCount);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (int c = 0; c < kColumnCount; ++c)
            cells[static_cast<std::size_t>(c)] = &table.rows[r][static_cast<std::size_t>(index[static_cast<std::size_t>(c)])];
        std::vector<std::string> problems;
        auto rec = record_from_cells(cells, problems);
        const bool id_ok = parse_int(table.rows[r][static_cast<std::size_t>(index[kCitId])]).has_value();
        finish_row(std::move(rec), std::move(problems), r + 1, id_ok, options, out);
    }
    return out;
}

namespace {

MasterReadResult parse_master_parquet(const std::filesystem::path& path, const MasterReadOptions& options) {
    auto table = read_parquet(path, master_columns());
    MasterReadResult out;
    out.format = TableFormat::Parquet;
    if (table.num_rows == 0) fail(ErrorCode::SchemaMismatch, "parquet file has no rows");
    const auto& names = master_columns();
    for (std::size_t row = 0; row < table.num_rows; ++row) {
        MasterRecord r;
        std::vector<std::string> problems;
        bool id_ok = true;
        for (int c = 0; c < kColumnCount; ++c) {
            auto& col = table.columns[static_cast<std::size_t>(c)];
            const auto& name = names[static_cast<std::size_t>(c)];
            if (col.is_null(row)) {
                problems.push_back(name + " is null");
                if (c == kCitId) id_ok = false;
                continue;
            }
            if (is_int_column(c)) {
                std::optional<std::int64_t> v;
                switch (col.kind) {
                    case ColumnKind::Int64:
                    case ColumnKind::Bool: v = col.ints[row]; break;
                    case ColumnKind::Double:
                        if (std::floor(col.doubles[row]) == col.doubles[row])
                            v = static_cast<std::int64_t>(col.doubles[row]);
                        break;
                    case ColumnKind::String: v = parse_int(col.strings[row]); break;
                }
                if (v)
                    *int_slot(r, c) = *v;
                else {
                    problems.push_back(name + ": not an integer");
                    if (c == kCitId) id_ok = false;
                }
            } else {
                auto* s = str_slot(r, c);
                switch (col.kind) {
                    case ColumnKind::String: *s = std::move(col.strings[row]); break;
                    case ColumnKind::Bool: *s = col.ints[row] ? "Y" : "N"; break;
                    case ColumnKind::Int64: *s = std::to_string(col.ints[row]); break;
                    case ColumnKind::Double: *s = text::format_fixed(col.doubles[row], 6); break;
                }
            }
        }
        finish_row(std::move(r), std::move(problems), row + 1, id_ok, options, out);
    }
    return out;
}

ParquetTable master_to_parquet(const std::vector<MasterRecord>& records) {
    ParquetTable t;
    t.num_rows = records.size();
    const auto& names = master_columns();
    for (int c = 0; c < kColumnCount; ++c) {
        ParquetColumn col;
        col.name = names[static_cast<std::size_t>(c)];
        col.kind = is_int_column(c) ? ColumnKind::Int64 : ColumnKind::String;
        for (const auto& r : records) {
            if (is_int_column(c))
                col.ints.push_back(*int_slot(r, c));
            else
                col.strings.push_back(*str_slot(r, c));
        }
        t.columns.push_back(std::move(col));
    }
    return t;
}

}  // namespace

std::string serialize_master_jsonl(const std::vector<MasterRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += record_json<nlohmann::ordered_json>(r).dump();
        out += '\n';
    }
    return out;
}

std::string serialize_master_delimited(const std::vector<MasterRecord>& records, char sep) {
    std::ostringstream out;
    write_row(out, master_columns(), sep);
    for (const auto& r : records) write_row(out, to_fields(r), sep);
    return out.str();
}

MasterReadResult read_master(const std::filesystem::path& path, const MasterReadOptions& options) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::Io, "no such file " + path.string());
    switch (format_for(path)) {
        case TableFormat::Parquet: return parse_master_parquet(path, options);
        case TableFormat::Jsonl: return parse_master_jsonl(read_file(path), options);
        case TableFormat::Tsv: return parse_master_delimited(read_file(path), '\t', options);
        case TableFormat::Csv: return parse_master_delimited(read_file(path), ',', options);
    }
    return {};
}

void write_master(const std::filesystem::path& path, const std::vector<MasterRecord>& records) {
    switch (format_for(path)) {
        case TableFormat::Parquet: write_parquet(path, master_to_parquet(records)); return;
        case TableFormat::Jsonl: write_file(path, serialize_master_jsonl(records)); return;
        case TableFormat::Tsv: write_file(path, serialize_master_delimited(records, '\t')); return;
        case TableFormat::Csv: write_file(path, serialize_master_delimited(records, ',')); return;
    }
}

metrics::ScoredCitation to_scored(const MasterRecord& r, const MatrixSet& matrices) {
    const auto l = labels_of(r);
    metrics::ScoredCitation s;
    s.query_id = r.query_id;
    s.model = r.model_short;
    s.provider = r.provider;
    s.category = r.category;
    s.sd = l.sd;
    s.st = l.st;
    s.ipa = matrices.ipa_score(l.qi, l.sp);
    s.ss = matrices.ss_score(l.sd, l.st);
    s.asf = asf_score(l.asf);
    return s;
}

}  // namespace citeaudit::io
