#pragma once

// The released analysis table: one row per evaluable citation pair.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citeaudit/metrics/metrics.hpp"
#include "citeaudit/taxonomy/score_matrix.hpp"

namespace citeaudit::io {

// Column order of the release table.
inline const std::vector<std::string>& master_columns() {
    static const std::vector<std::string> cols{
        "cit_id",    "query_id", "site",     "category", "model_short", "provider",   "cited_sentence",
        "url_id",    "source_url", "clen",   "cited_len", "crawl_yn",   "QI_label",   "SP_label",
        "ASF_label", "SD_label", "ST_label", "ipam_score", "asf_score", "ssm_score"};
    return cols;
}

struct MasterRecord {
    std::int64_t cit_id = 0;
    std::string query_id;
    std::string site;
    std::string category;
    std::string model_short;
    std::string provider;
    std::string cited_sentence;
    std::string url_id;
    std::string source_url;
    std::int64_t clen = 0;
    std::int64_t cited_len = 0;
    std::string crawl_yn = "Y";
    std::string qi_label;
    std::string sp_label;
    std::string asf_label;
    std::string sd_label;
    std::string st_label;
    std::int64_t ipam_score = 0;
    std::int64_t asf_score = 0;
    std::int64_t ssm_score = 0;

    bool operator==(const MasterRecord&) const = default;
};

// Invariant check. Returns one message per violated rule; empty when valid.
std::vector<std::string> validate_record(const MasterRecord& r,
                                         const taxonomy::MatrixSet& matrices = taxonomy::MatrixSet{});

// Parsed labels; throws InvalidLabel when any code is malformed.
metrics::CitationLabels labels_of(const MasterRecord& r);

// Fills cited_len and the three scores from the labels.
void derive_fields(MasterRecord& r, const taxonomy::MatrixSet& matrices = taxonomy::MatrixSet{});

nlohmann::json to_json(const MasterRecord& r);
MasterRecord master_from_json(const nlohmann::json& j);  // SchemaMismatch on missing/mistyped keys

std::vector<std::string> to_fields(const MasterRecord& r);

enum class TableFormat { Parquet, Jsonl, Csv, Tsv };

// By extension: .parquet, .jsonl/.ndjson/.json, .tsv/.tab, anything else CSV.
TableFormat format_for(const std::filesystem::path& path);

struct RowViolation {
    std::size_t row = 0;                  // 1-based data row
    std::optional<std::int64_t> cit_id;   // when it could be read
    std::vector<std::string> problems;
};

nlohmann::json to_json(const RowViolation& v);

struct MasterReadOptions {
    bool strict = false;  // any violation raises ValidationFailed
    taxonomy::MatrixSet matrices;
};

struct MasterReadResult {
    std::vector<MasterRecord> records;  // valid rows, file order
    std::vector<RowViolation> violations;
    std::size_t rows_read = 0;
    TableFormat format = TableFormat::Csv;
};

// Missing columns or an empty file raise SchemaMismatch; unreadable files IoError.
MasterReadResult read_master(const std::filesystem::path& path, const MasterReadOptions& options = {});
void write_master(const std::filesystem::path& path, const std::vector<MasterRecord>& records);

// In-memory forms used by the file functions.
MasterReadResult parse_master_jsonl(std::string_view text, const MasterReadOptions& options = {});
MasterReadResult parse_master_delimited(std::string_view text, char sep, const MasterReadOptions& options = {});
std::string serialize_master_jsonl(const std::vector<MasterRecord>& records);
std::string serialize_master_delimited(const std::vector<MasterRecord>& records, char sep);

// Scored view consumed by the metrics engine.
metrics::ScoredCitation to_scored(const MasterRecord& r, const taxonomy::MatrixSet& matrices = taxonomy::MatrixSet{});

}  // namespace citeaudit::io
