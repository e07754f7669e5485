#pragma once

// Minimal Parquet support for flat tables.
//
// Reading covers what common writers emit for flat schemas: data pages v1 and
// v2, PLAIN and dictionary (PLAIN_DICTIONARY / RLE_DICTIONARY) encodings,
// optional columns with one definition level, and UNCOMPRESSED, SNAPPY or GZIP
// column chunks. Anything else raises UnsupportedFormat naming the feature.
//
// Writing emits PLAIN, uncompressed v1 pages.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citeaudit::io {

enum class ColumnKind { Int64, Double, Bool, String };

struct ParquetColumn {
    std::string name;
    ColumnKind kind = ColumnKind::String;
    std::vector<std::int64_t> ints;     // Int64 and Bool
    std::vector<double> doubles;
    std::vector<std::string> strings;
    std::vector<std::uint8_t> valid;    // empty = no nulls; else one flag per row

    std::size_t size() const noexcept;
    bool is_null(std::size_t row) const noexcept { return !valid.empty() && !valid[row]; }
};

struct ParquetTable {
    std::uint64_t num_rows = 0;
    std::vector<ParquetColumn> columns;

    const ParquetColumn* find(std::string_view name) const noexcept;
};

// Leaf column names of the file schema, in schema order.
std::vector<std::string> parquet_column_names(const std::filesystem::path& path);

// Reads the named columns (all columns when `columns` is empty). A requested
// column absent from the file raises SchemaMismatch.
ParquetTable read_parquet(const std::filesystem::path& path, const std::vector<std::string>& columns = {});
ParquetTable parse_parquet(std::string_view file, const std::vector<std::string>& columns = {});

struct ParquetWriteOptions {
    std::size_t rows_per_group = 131072;
    std::string created_by = "citeaudit";
};

std::string serialize_parquet(const ParquetTable& table, const ParquetWriteOptions& options = {});
void write_parquet(const std::filesystem::path& path, const ParquetTable& table,
                   const ParquetWriteOptions& options = {});

// Raw snappy block decompression (no framing). Throws UnsupportedFormat on
// corrupt input.
std::string snappy_decompress(std::string_view compressed);

}  // namespace citeaudit::io
