#include "citeaudit/io/parquet.hpp"

#include <zlib.h>

#include <cstring>

#include "citeaudit/common/error.hpp"
#include "citeaudit/io/delimited.hpp"

namespace citeaudit::io {

namespace {

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorCode::UnsupportedFormat, "parquet: " + what); }

// ---- thrift compact protocol ------------------------------------------------

enum : std::uint8_t {
    T_STOP = 0,
    T_TRUE = 1,
    T_FALSE = 2,
    T_BYTE = 3,
    T_I16 = 4,
    T_I32 = 5,
    T_I64 = 6,
    T_DOUBLE = 7,
    T_BINARY = 8,
    T_LIST = 9,
    T_SET = 10,
    T_MAP = 11,
    T_STRUCT = 12,
};

struct TValue {
    std::uint8_t type = T_STOP;
    std::int64_t i = 0;  // integers and booleans
    double d = 0.0;
    std::string bin;
    std::vector<TValue> elems;       // list/set elements, map key/value pairs flattened
    std::vector<std::int16_t> ids;   // struct field ids, parallel to elems

    const TValue* field(std::int16_t id) const noexcept {
        for (std::size_t k = 0; k < ids.size(); ++k)
            if (ids[k] == id) return &elems[k];
        return nullptr;
    }
    std::int64_t int_or(std::int16_t id, std::int64_t fallback) const noexcept {
        const auto* f = field(id);
        return f ? f->i : fallback;
    }
};

class CompactReader {
public:
    CompactReader(const std::uint8_t* p, const std::uint8_t* end) : p_(p), begin_(p), end_(end) {}

    std::size_t consumed() const noexcept { return static_cast<std::size_t>(p_ - begin_); }

    TValue read_struct(int depth = 0) {
        if (depth > 64) corrupt("thrift nesting too deep");
        TValue v;
        v.type = T_STRUCT;
        std::int16_t last = 0;
        for (;;) {
            const std::uint8_t h = byte();
            if (h == T_STOP) break;
            const std::uint8_t type = h & 0x0F;
            const std::uint8_t delta = h >> 4;
            const std::int16_t id = delta ? static_cast<std::int16_t>(last + delta)
                                          : static_cast<std::int16_t>(zigzag(varint()));
            last = id;
            TValue f;
            if (type == T_TRUE || type == T_FALSE) {
                f.type = T_TRUE;
                f.i = type == T_TRUE;
            } else {
                f = read_value(type, depth + 1);
            }
            v.ids.push_back(id);
            v.elems.push_back(std::move(f));
        }
        return v;
    }

private:
    std::uint8_t byte() {
        if (p_ >= end_) corrupt("truncated thrift data");
        return *p_++;
    }
    std::uint64_t varint() {
        std::uint64_t r = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const std::uint8_t b = byte();
            r |= static_cast<std::uint64_t>(b & 0x7F) << shift;
            if (!(b & 0x80)) return r;
        }
        corrupt("varint too long");
    }
    static std::int64_t zigzag(std::uint64_t n) { return static_cast<std::int64_t>(n >> 1) ^ -static_cast<std::int64_t>(n & 1); }

    TValue read_value(std::uint8_t type, int depth) {
        TValue v;
        v.type = type;
        switch (type) {
            case T_TRUE:
            case T_FALSE:
                v.type = T_TRUE;
                v.i = byte() == 1;
                break;
            case T_BYTE: v.i = static_cast<std::int8_t>(byte()); break;
            case T_I16:
            case T_I32:
            case T_I64: v.i = zigzag(varint()); break;
            case T_DOUBLE: {
                if (end_ - p_ < 8) corrupt("truncated double");
                std::memcpy(&v.d, p_, 8);
                p_ += 8;
                break;
            }
            case T_BINARY: {
                const auto n = varint();
                if (n > static_cast<std::uint64_t>(end_ - p_)) corrupt("truncated binary");
                v.bin.assign(reinterpret_cast<const char*>(p_), n);
                p_ += n;
                break;
            }
            case T_LIST:
            case T_SET: {
                const std::uint8_t h = byte();
                std::uint64_t n = h >> 4;
                if (n == 15) n = varint();
                const std::uint8_t et = h & 0x0F;
                if (n > static_cast<std::uint64_t>(end_ - p_) + 1) corrupt("list size exceeds data");
                for (std::uint64_t k = 0; k < n; ++k) v.elems.push_back(read_value(et, depth + 1));
                break;
            }
            case T_MAP: {
                const auto n = varint();
                if (n == 0) break;
                const std::uint8_t kv = byte();
                if (n > static_cast<std::uint64_t>(end_ - p_)) corrupt("map size exceeds data");
                for (std::uint64_t k = 0; k < n; ++k) {
                    v.elems.push_back(read_value(kv >> 4, depth + 1));
                    v.elems.push_back(read_value(kv & 0x0F, depth + 1));
                }
                break;
            }
            case T_STRUCT: v = read_struct(depth); break;
            default: corrupt("unknown thrift type " + std::to_string(type));
        }
        return v;
    }

    const std::uint8_t* p_;
    const std::uint8_t* begin_;
    const std::uint8_t* end_;
};

class CompactWriter {
public:
    std::string out;

    void field(std::int16_t id, std::uint8_t type) {
        const int delta = id - last_.back();
        if (delta > 0 && delta <= 15) {
            out += static_cast<char>((delta << 4) | type);
        } else {
            out += static_cast<char>(type);
            varint(zigzag(id));
        }
        last_.back() = id;
    }
    void i32(std::int16_t id, std::int64_t v) {
        field(id, T_I32);
        varint(zigzag(v));
    }
    void i64(std::int16_t id, std::int64_t v) {
        field(id, T_I64);
        varint(zigzag(v));
    }
    void binary(std::int16_t id, std::string_view s) {
        field(id, T_BINARY);
        raw_binary(s);
    }
    void raw_binary(std::string_view s) {
        varint(s.size());
        out.append(s);
    }
    void list(std::int16_t id, std::uint8_t elem_type, std::size_t n) {
        field(id, T_LIST);
        list_header(elem_type, n);
    }
    void list_header(std::uint8_t elem_type, std::size_t n) {
        if (n < 15) {
            out += static_cast<char>((n << 4) | elem_type);
        } else {
            out += static_cast<char>(0xF0 | elem_type);
            varint(n);
        }
    }
    void begin_struct(std::int16_t id) {
        field(id, T_STRUCT);
        last_.push_back(0);
    }
    void begin_element() { last_.push_back(0); }  // struct inside a list
    void end_struct() {
        out += static_cast<char>(T_STOP);
        last_.pop_back();
    }
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            out += static_cast<char>((v & 0x7F) | 0x80);
            v >>= 7;
        }
        out += static_cast<char>(v);
    }
    static std::uint64_t zigzag(std::int64_t v) {
        return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
    }

private:
    std::vector<std::int16_t> last_{0};
};

// ---- format constants -------------------------------------------------------

enum PhysicalType { P_BOOLEAN = 0, P_INT32, P_INT64, P_INT96, P_FLOAT, P_DOUBLE, P_BYTE_ARRAY, P_FIXED };
enum Codec { C_UNCOMPRESSED = 0, C_SNAPPY = 1, C_GZIP = 2 };
enum Encoding { E_PLAIN = 0, E_PLAIN_DICTIONARY = 2, E_RLE = 3, E_BIT_PACKED = 4, E_RLE_DICTIONARY = 8 };
enum PageType { PG_DATA = 0, PG_INDEX = 1, PG_DICTIONARY = 2, PG_DATA_V2 = 3 };

const char* codec_name(std::int64_t c) {
    switch (c) {
        case 3: return "LZO";
        case 4: return "BROTLI";
        case 5: return "LZ4";
        case 6: return "ZSTD";
        case 7: return "LZ4_RAW";
        default: return "unknown";
    }
}

std::string inflate_gzip(std::string_view in, std::size_t expected) {
    std::string out(expected, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) corrupt("zlib init failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) corrupt("gzip page did not inflate to its declared size");
    return out;
}

std::string decompress(std::int64_t codec, std::string_view in, std::size_t expected) {
    switch (codec) {
        case C_UNCOMPRESSED: return std::string(in);
        case C_SNAPPY: {
            auto s = snappy_decompress(in);
            if (s.size() != expected) corrupt("snappy page size mismatch");
            return s;
        }
        case C_GZIP: return inflate_gzip(in, expected);
        default: fail(ErrorCode::UnsupportedFormat, std::string("parquet: compression codec ") + codec_name(codec));
    }
}

// ---- value decoding -----------------------------------------------------------

struct ByteCursor {
    const std::uint8_t* p;
    const std::uint8_t* end;

    std::size_t left() const noexcept { return static_cast<std::size_t>(end - p); }
    void need(std::size_t n) const {
        if (left() < n) corrupt("page data truncated");
    }
    std::uint32_t u32le() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, p, 4);
        p += 4;
        return v;
    }
    std::uint64_t varint() {
        std::uint64_t r = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            need(1);
            const std::uint8_t b = *p++;
            r |= static_cast<std::uint64_t>(b & 0x7F) << shift;
            if (!(b & 0x80)) return r;
        }
        corrupt("varint too long");
    }
};

// RLE / bit-packed hybrid run sequence, `count` values of `bit_width` bits.
std::vector<std::uint32_t> decode_hybrid(ByteCursor& c, int bit_width, std::size_t count) {
    std::vector<std::uint32_t> out;
    out.reserve(count);
    if (bit_width > 32) corrupt("bit width above 32");
    const std::size_t value_bytes = static_cast<std::size_t>((bit_width + 7) / 8);
    while (out.size() < count) {
        const auto header = c.varint();
        if (header & 1) {
            const std::size_t groups = header >> 1;
            const std::size_t nbytes = groups * static_cast<std::size_t>(bit_width);
            c.need(nbytes);
            const std::size_t nvals = groups * 8;
            std::uint64_t buffer = 0;
            int bits = 0;
            const std::uint8_t* q = c.p;
            for (std::size_t k = 0; k < nvals; ++k) {
                while (bits < bit_width) {
                    buffer |= static_cast<std::uint64_t>(*q++) << bits;
                    bits += 8;
                }
                const auto v = bit_width == 0 ? 0u : static_cast<std::uint32_t>(buffer & ((1ull << bit_width) - 1));
                buffer >>= bit_width;
                bits -= bit_width;
                if (out.size() < count) out.push_back(v);
            }
            c.p += nbytes;
        } else {
            const std::size_t run = header >> 1;
            c.need(value_bytes);
            std::uint32_t v = 0;
            for (std::size_t b = 0; b < value_bytes; ++b) v |= static_cast<std::uint32_t>(c.p[b]) << (8 * b);
            c.p += value_bytes;
            if (run == 0) corrupt("empty RLE run");
            for (std::size_t k = 0; k < run && out.size() < count; ++k) out.push_back(v);
        }
    }
    return out;
}

struct LeafInfo {
    std::string name;
    int physical = P_BYTE_ARRAY;
    int type_length = 0;
    int max_def = 0;
    int max_rep = 0;
};

ColumnKind kind_for(const LeafInfo& leaf) {
    switch (leaf.physical) {
        case P_BOOLEAN: return ColumnKind::Bool;
        case P_INT32:
        case P_INT64: return ColumnKind::Int64;
        case P_FLOAT:
        case P_DOUBLE: return ColumnKind::Double;
        case P_BYTE_ARRAY:
        case P_FIXED: return ColumnKind::String;
        default: fail(ErrorCode::UnsupportedFormat, "parquet: INT96 column " + leaf.name);
    }
}

// Appends `n` PLAIN values of the leaf's physical type.
void decode_plain(ByteCursor& c, const LeafInfo& leaf, std::size_t n, ParquetColumn& col) {
    switch (leaf.physical) {
        case P_BOOLEAN: {
            c.need((n + 7) / 8);
            for (std::size_t k = 0; k < n; ++k) col.ints.push_back((c.p[k / 8] >> (k % 8)) & 1);
            c.p += (n + 7) / 8;
            break;
        }
        case P_INT32: {
            c.need(4 * n);
            for (std::size_t k = 0; k < n; ++k) {
                std::int32_t v;
                std::memcpy(&v, c.p + 4 * k, 4);
                col.ints.push_back(v);
            }
            c.p += 4 * n;
            break;
        }
        case P_INT64: {
            c.need(8 * n);
            for (std::size_t k = 0; k < n; ++k) {
                std::int64_t v;
                std::memcpy(&v, c.p + 8 * k, 8);
                col.ints.push_back(v);
            }
            c.p += 8 * n;
            break;
        }
        case P_FLOAT: {
            c.need(4 * n);
            for (std::size_t k = 0; k < n; ++k) {
                float v;
                std::memcpy(&v, c.p + 4 * k, 4);
                col.doubles.push_back(v);
            }
            c.p += 4 * n;
            break;
        }
        case P_DOUBLE: {
            c.need(8 * n);
            for (std::size_t k = 0; k < n; ++k) {
                double v;
                std::memcpy(&v, c.p + 8 * k, 8);
                col.doubles.push_back(v);
            }
            c.p += 8 * n;
            break;
        }
        case P_BYTE_ARRAY: {
            for (std::size_t k = 0; k < n; ++k) {
                const auto len = c.u32le();
                c.need(len);
                col.strings.emplace_back(reinterpret_cast<const char*>(c.p), len);
                c.p += len;
            }
            break;
        }
        case P_FIXED: {
            const auto len = static_cast<std::size_t>(leaf.type_length);
            c.need(len * n);
            for (std::size_t k = 0; k < n; ++k)
                col.strings.emplace_back(reinterpret_cast<const char*>(c.p + len * k), len);
            c.p += len * n;
            break;
        }
        default: corrupt("unsupported physical type");
    }
}

void append_from_dictionary(const ParquetColumn& dict, const std::vector<std::uint32_t>& idx, ParquetColumn& col) {
    for (auto k : idx) {
        switch (col.kind) {
            case ColumnKind::Int64:
            case ColumnKind::Bool:
                if (k >= dict.ints.size()) corrupt("dictionary index out of range");
                col.ints.push_back(dict.ints[k]);
                break;
            case ColumnKind::Double:
                if (k >= dict.doubles.size()) corrupt("dictionary index out of range");
                col.doubles.push_back(dict.doubles[k]);
                break;
            case ColumnKind::String:
                if (k >= dict.strings.size()) corrupt("dictionary index out of range");
                col.strings.push_back(dict.strings[k]);
                break;
        }
    }
}

// Decodes the values section of a data page holding `non_null` values.
void decode_values(ByteCursor& c, std::int64_t encoding, const LeafInfo& leaf, std::size_t non_null,
                   const std::optional<ParquetColumn>& dict, ParquetColumn& col) {
    if (encoding == E_PLAIN) {
        decode_plain(c, leaf, non_null, col);
    } else if (encoding == E_PLAIN_DICTIONARY || encoding == E_RLE_DICTIONARY) {
        if (!dict) corrupt("dictionary-encoded page without a dictionary in column " + leaf.name);
        if (non_null == 0) return;
        c.need(1);
        const int width = *c.p++;
        append_from_dictionary(*dict, decode_hybrid(c, width, non_null), col);
    } else if (encoding == E_RLE && leaf.physical == P_BOOLEAN) {
        c.u32le();
        for (auto v : decode_hybrid(c, 1, non_null)) col.ints.push_back(v);
    } else {
        fail(ErrorCode::UnsupportedFormat,
             "parquet: value encoding " + std::to_string(encoding) + " in column " + leaf.name);
    }
}

void push_null(ParquetColumn& col) {
    switch (col.kind) {
        case ColumnKind::Int64:
        case ColumnKind::Bool: col.ints.push_back(0); break;
        case ColumnKind::Double: col.doubles.push_back(0.0); break;
        case ColumnKind::String: col.strings.emplace_back(); break;
    }
}

// Scatters decoded non-null values to their rows given definition levels.
void scatter(ParquetColumn& col, std::size_t before, const std::vector<std::uint32_t>& defs, int max_def) {
    ParquetColumn tmp;
    tmp.kind = col.kind;
    // move the freshly decoded values out, then re-append with nulls
    switch (col.kind) {
        case ColumnKind::Int64:
        case ColumnKind::Bool:
            tmp.ints.assign(col.ints.begin() + static_cast<std::ptrdiff_t>(before), col.ints.end());
            col.ints.resize(before);
            break;
        case ColumnKind::Double:
            tmp.doubles.assign(col.doubles.begin() + static_cast<std::ptrdiff_t>(before), col.doubles.end());
            col.doubles.resize(before);
            break;
        case ColumnKind::String:
            tmp.strings.assign(std::make_move_iterator(col.strings.begin() + static_cast<std::ptrdiff_t>(before)),
                               std::make_move_iterator(col.strings.end()));
            col.strings.resize(before);
            break;
    }
    std::size_t next = 0;
    for (auto d : defs) {
        const bool present = static_cast<int>(d) == max_def;
        col.valid.push_back(present);
        if (!present) {
            push_null(col);
            continue;
        }
        switch (col.kind) {
            case ColumnKind::Int64:
            case ColumnKind::Bool: col.ints.push_back(tmp.ints[next]); break;
            case ColumnKind::Double: col.doubles.push_back(tmp.doubles[next]); break;
            case ColumnKind::String: col.strings.push_back(std::move(tmp.strings[next])); break;
        }
        ++next;
    }
}

std::vector<LeafInfo> leaves_of(const TValue& meta) {
    const auto* schema = meta.field(2);
    if (!schema || schema->elems.empty()) corrupt("file metadata has no schema");
    std::vector<LeafInfo> leaves;
    // Walk the flattened depth-first schema list.
    struct Frame {
        std::int64_t remaining;
        int def;
        int rep;
        std::string prefix;
    };
    std::vector<Frame> stack{{schema->elems[0].int_or(5, 0), 0, 0, ""}};
    for (std::size_t k = 1; k < schema->elems.size(); ++k) {
        while (!stack.empty() && stack.back().remaining == 0) stack.pop_back();
        if (stack.empty()) corrupt("schema children overflow");
        auto& parent = stack.back();
        --parent.remaining;
        const auto& el = schema->elems[k];
        const auto* name = el.field(4);
        const std::string full = parent.prefix + (name ? name->bin : std::string());
        const auto repetition = el.int_or(3, 0);
        const int def = parent.def + (repetition != 0 ? 1 : 0);
        const int rep = parent.rep + (repetition == 2 ? 1 : 0);
        const auto children = el.int_or(5, 0);
        if (children > 0) {
            stack.push_back({children, def, rep, full + "."});
        } else {
            LeafInfo leaf;
            leaf.name = full;
            leaf.physical = static_cast<int>(el.int_or(1, P_BYTE_ARRAY));
            leaf.type_length = static_cast<int>(el.int_or(2, 0));
            leaf.max_def = def;
            leaf.max_rep = rep;
            leaves.push_back(std::move(leaf));
        }
    }
    return leaves;
}

TValue read_footer(std::string_view file) {
    if (file.size() < 12 || file.substr(0, 4) != "PAR1" || file.substr(file.size() - 4) != "PAR1")
        fail(ErrorCode::SchemaMismatch, "not a parquet file (missing PAR1 magic)");
    std::uint32_t len;
    std::memcpy(&len, file.data() + file.size() - 8, 4);
    if (len > file.size() - 12) corrupt("footer length out of range");
    const auto* base = reinterpret_cast<const std::uint8_t*>(file.data() + file.size() - 8 - len);
    CompactReader r(base, base + len);
    return r.read_struct();
}

void read_chunk(std::string_view file, const TValue& chunk_meta, const LeafInfo& leaf, ParquetColumn& col) {
    const auto codec = chunk_meta.int_or(4, 0);
    const auto total = static_cast<std::uint64_t>(chunk_meta.int_or(5, 0));
    const auto data_off = chunk_meta.int_or(9, 0);
    const auto dict_off = chunk_meta.int_or(11, 0);
    std::int64_t pos = (dict_off > 0 && dict_off < data_off) ? dict_off : data_off;
    std::optional<ParquetColumn> dict;
    std::uint64_t seen = 0;
    while (seen < total) {
        if (pos < 0 || static_cast<std::uint64_t>(pos) >= file.size()) corrupt("page offset out of range");
        const auto* base = reinterpret_cast<const std::uint8_t*>(file.data());
        CompactReader hr(base + pos, base + file.size());
        const TValue header = hr.read_struct();
        pos += static_cast<std::int64_t>(hr.consumed());
        const auto page_type = header.int_or(1, -1);
        const auto uncompressed = static_cast<std::size_t>(header.int_or(2, 0));
        const auto compressed = static_cast<std::size_t>(header.int_or(3, 0));
        if (static_cast<std::uint64_t>(pos) + compressed > file.size()) corrupt("page body out of range");
        const std::string_view body = file.substr(static_cast<std::size_t>(pos), compressed);
        pos += static_cast<std::int64_t>(compressed);

        if (page_type == PG_DICTIONARY) {
            const auto* dh = header.field(7);
            if (!dh) corrupt("dictionary page without header");
            const auto data = decompress(codec, body, uncompressed);
            ByteCursor c{reinterpret_cast<const std::uint8_t*>(data.data()),
                         reinterpret_cast<const std::uint8_t*>(data.data()) + data.size()};
            ParquetColumn d;
            d.kind = col.kind;
            decode_plain(c, leaf, static_cast<std::size_t>(dh->int_or(1, 0)), d);
            dict = std::move(d);
        } else if (page_type == PG_DATA) {
            const auto* dh = header.field(5);
            if (!dh) corrupt("data page without header");
            const auto n = static_cast<std::size_t>(dh->int_or(1, 0));
            const auto data = decompress(codec, body, uncompressed);
            ByteCursor c{reinterpret_cast<const std::uint8_t*>(data.data()),
                         reinterpret_cast<const std::uint8_t*>(data.data()) + data.size()};
            std::vector<std::uint32_t> defs;
            std::size_t non_null = n;
            if (leaf.max_def > 0) {
                const auto len = c.u32le();
                c.need(len);
                ByteCursor lc{c.p, c.p + len};
                defs = decode_hybrid(lc, 1, n);
                c.p += len;
                non_null = 0;
                for (auto d : defs) non_null += static_cast<int>(d) == leaf.max_def;
            }
            const auto before = col.size();
            decode_values(c, dh->int_or(2, E_PLAIN), leaf, non_null, dict, col);
            if (leaf.max_def > 0) scatter(col, before, defs, leaf.max_def);
            seen += n;
        } else if (page_type == PG_DATA_V2) {
            const auto* dh = header.field(8);
            if (!dh) corrupt("data page v2 without header");
            const auto n = static_cast<std::size_t>(dh->int_or(1, 0));
            const auto nulls = static_cast<std::size_t>(dh->int_or(2, 0));
            const auto def_len = static_cast<std::size_t>(dh->int_or(5, 0));
            const auto rep_len = static_cast<std::size_t>(dh->int_or(6, 0));
            const bool is_compressed = dh->int_or(7, 1) != 0;
            if (def_len + rep_len > body.size()) corrupt("v2 level lengths exceed page");
            std::vector<std::uint32_t> defs;
            if (leaf.max_def > 0) {
                ByteCursor lc{reinterpret_cast<const std::uint8_t*>(body.data() + rep_len),
                              reinterpret_cast<const std::uint8_t*>(body.data() + rep_len + def_len)};
                defs = decode_hybrid(lc, 1, n);
            }
            const auto values_raw = body.substr(def_len + rep_len);
            const auto data = is_compressed ? decompress(codec, values_raw, uncompressed - def_len - rep_len)
                                            : std::string(values_raw);
            ByteCursor c{reinterpret_cast<const std::uint8_t*>(data.data()),
                         reinterpret_cast<const std::uint8_t*>(data.data()) + data.size()};
            const auto before = col.size();
            decode_values(c, dh->int_or(4, E_PLAIN), leaf, n - nulls, dict, col);
            if (leaf.max_def > 0) scatter(col, before, defs, leaf.max_def);
            seen += n;
        }
        // index pages and unknown page types are skipped
    }
}

}  // namespace

std::size_t ParquetColumn::size() const noexcept {
    switch (kind) {
        case ColumnKind::Int64:
        case ColumnKind::Bool: return ints.size();
        case ColumnKind::Double: return doubles.size();
        case ColumnKind::String: return strings.size();
    }
    return 0;
}

const ParquetColumn* ParquetTable::find(std::string_view name) const noexcept {
    for (const auto& c : columns)
        if (c.name == name) return &c;
    return nullptr;
}

std::string snappy_decompress(std::string_view in) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(in.data());
    const auto* end = p + in.size();
    ByteCursor c{p, end};
    const auto expected = c.varint();
    if (expected > (1ull << 32)) corrupt("snappy length too large");
    std::string out;
    out.reserve(expected);
    while (c.p < end) {
        const std::uint8_t tag = *c.p++;
        const int kind = tag & 3;
        if (kind == 0) {
            std::size_t len = tag >> 2;
            if (len >= 60) {
                const std::size_t extra = len - 59;
                c.need(extra);
                len = 0;
                for (std::size_t b = 0; b < extra; ++b) len |= static_cast<std::size_t>(c.p[b]) << (8 * b);
                c.p += extra;
            }
            ++len;
            c.need(len);
            out.append(reinterpret_cast<const char*>(c.p), len);
            c.p += len;
            continue;
        }
        std::size_t len, offset;
        if (kind == 1) {
            c.need(1);
            len = ((tag >> 2) & 7) + 4;
            offset = (static_cast<std::size_t>(tag >> 5) << 8) | *c.p++;
        } else if (kind == 2) {
            c.need(2);
            len = (tag >> 2) + 1;
            offset = c.p[0] | (static_cast<std::size_t>(c.p[1]) << 8);
            c.p += 2;
        } else {
            len = (tag >> 2) + 1;
            offset = c.u32le();
        }
        if (offset == 0 || offset > out.size()) corrupt("snappy copy offset out of range");
        const std::size_t from = out.size() - offset;
        for (std::size_t k = 0; k < len; ++k) out += out[from + k];  // overlapping copies are byte-wise
    }
    if (out.size() != expected) corrupt("snappy output length mismatch");
    return out;
}

std::vector<std::string> parquet_column_names(const std::filesystem::path& path) {
    const auto file = read_file(path);
    std::vector<std::string> names;
    for (auto& leaf : leaves_of(read_footer(file))) names.push_back(std::move(leaf.name));
    return names;
}

ParquetTable parse_parquet(std::string_view file, const std::vector<std::string>& wanted) {
    const TValue meta = read_footer(file);
    const auto leaves = leaves_of(meta);
    std::vector<std::size_t> picks;
    if (wanted.empty()) {
        for (std::size_t k = 0; k < leaves.size(); ++k) picks.push_back(k);
    } else {
        for (const auto& w : wanted) {
            std::size_t k = 0;
            while (k < leaves.size() && leaves[k].name != w) ++k;
            if (k == leaves.size()) fail(ErrorCode::SchemaMismatch, "parquet file lacks column " + w);
            picks.push_back(k);
        }
    }
    ParquetTable table;
    table.num_rows = static_cast<std::uint64_t>(meta.int_or(3, 0));
    for (auto k : picks) {
        const auto& leaf = leaves[k];
        if (leaf.max_rep > 0 || leaf.max_def > 1)
            fail(ErrorCode::UnsupportedFormat, "parquet: nested column " + leaf.name);
        ParquetColumn col;
        col.name = leaf.name;
        col.kind = kind_for(leaf);
        if (const auto* groups = meta.field(4)) {
            for (const auto& rg : groups->elems) {
                const auto* chunks = rg.field(1);
                if (!chunks || k >= chunks->elems.size()) corrupt("row group lacks column chunk");
                const auto* cm = chunks->elems[k].field(3);
                if (!cm) fail(ErrorCode::UnsupportedFormat, "parquet: column chunk stored in an external file");
                read_chunk(file, *cm, leaf, col);
            }
        }
        if (col.size() != table.num_rows)
            corrupt("column " + col.name + " decoded " + std::to_string(col.size()) + " values for " +
                    std::to_string(table.num_rows) + " rows");
        if (!col.valid.empty()) {
            bool any_null = false;
            for (auto v : col.valid) any_null |= !v;
            if (!any_null) col.valid.clear();
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

ParquetTable read_parquet(const std::filesystem::path& path, const std::vector<std::string>& columns) {
    return parse_parquet(read_file(path), columns);
}

namespace {

int physical_of(ColumnKind k) {
    switch (k) {
        case ColumnKind::Int64: return P_INT64;
        case ColumnKind::Double: return P_DOUBLE;
        case ColumnKind::Bool: return P_BOOLEAN;
        case ColumnKind::String: return P_BYTE_ARRAY;
    }
    return P_BYTE_ARRAY;
}

void put_u32(std::string& s, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    s.append(b, 4);
}

std::string encode_def_levels(const ParquetColumn& col, std::size_t begin, std::size_t end) {
    std::string runs;
    CompactWriter w;  // only its varint helper is used
    std::size_t k = begin;
    while (k < end) {
        const auto v = col.valid[k];
        std::size_t j = k;
        while (j < end && col.valid[j] == v) ++j;
        w.varint((j - k) << 1);
        w.out += static_cast<char>(v ? 1 : 0);
        k = j;
    }
    std::string out;
    put_u32(out, static_cast<std::uint32_t>(w.out.size()));
    out += w.out;
    return out;
}

std::string encode_plain(const ParquetColumn& col, std::size_t begin, std::size_t end) {
    std::string out;
    const bool nullable = !col.valid.empty();
    switch (col.kind) {
        case ColumnKind::Int64:
            for (std::size_t k = begin; k < end; ++k) {
                if (nullable && !col.valid[k]) continue;
                char b[8];
                std::memcpy(b, &col.ints[k], 8);
                out.append(b, 8);
            }
            break;
        case ColumnKind::Double:
            for (std::size_t k = begin; k < end; ++k) {
                if (nullable && !col.valid[k]) continue;
                char b[8];
                std::memcpy(b, &col.doubles[k], 8);
                out.append(b, 8);
            }
            break;
        case ColumnKind::Bool: {
            std::uint8_t acc = 0;
            int bit = 0;
            for (std::size_t k = begin; k < end; ++k) {
                if (nullable && !col.valid[k]) continue;
                if (col.ints[k]) acc |= static_cast<std::uint8_t>(1u << bit);
                if (++bit == 8) {
                    out += static_cast<char>(acc);
                    acc = 0;
                    bit = 0;
                }
            }
            if (bit) out += static_cast<char>(acc);
            break;
        }
        case ColumnKind::String:
            for (std::size_t k = begin; k < end; ++k) {
                if (nullable && !col.valid[k]) continue;
                put_u32(out, static_cast<std::uint32_t>(col.strings[k].size()));
                out += col.strings[k];
            }
            break;
    }
    return out;
}

struct ChunkRecord {
    std::int64_t offset = 0;
    std::int64_t size = 0;
    std::int64_t values = 0;
};

}  // namespace

std::string serialize_parquet(const ParquetTable& table, const ParquetWriteOptions& options) {
    for (const auto& c : table.columns) {
        if (c.size() != table.num_rows)
            fail(ErrorCode::InvalidArgument, "column " + c.name + " length differs from num_rows");
        if (!c.valid.empty() && c.valid.size() != table.num_rows)
            fail(ErrorCode::InvalidArgument, "column " + c.name + " validity length differs from num_rows");
    }
    const std::size_t per_group = std::max<std::size_t>(1, options.rows_per_group);
    std::string file = "PAR1";
    std::vector<std::vector<ChunkRecord>> groups;
    std::vector<std::size_t> group_rows;
    for (std::size_t begin = 0; begin < table.num_rows || (begin == 0 && groups.empty()); begin += per_group) {
        const std::size_t end = std::min<std::size_t>(table.num_rows, begin + per_group);
        std::vector<ChunkRecord> chunks;
        for (const auto& col : table.columns) {
            std::string body;
            if (!col.valid.empty()) body += encode_def_levels(col, begin, end);
            body += encode_plain(col, begin, end);
            CompactWriter h;
            h.i32(1, PG_DATA);
            h.i32(2, static_cast<std::int64_t>(body.size()));
            h.i32(3, static_cast<std::int64_t>(body.size()));
            h.begin_struct(5);
            h.i32(1, static_cast<std::int64_t>(end - begin));
            h.i32(2, E_PLAIN);
            h.i32(3, E_RLE);
            h.i32(4, E_RLE);
            h.end_struct();
            h.out += static_cast<char>(T_STOP);
            ChunkRecord rec;
            rec.offset = static_cast<std::int64_t>(file.size());
            rec.size = static_cast<std::int64_t>(h.out.size() + body.size());
            rec.values = static_cast<std::int64_t>(end - begin);
            file += h.out;
            file += body;
            chunks.push_back(rec);
        }
        groups.push_back(std::move(chunks));
        group_rows.push_back(end - begin);
        if (end == table.num_rows) break;
    }

    CompactWriter m;
    m.i32(1, 1);
    m.list(2, T_STRUCT, table.columns.size() + 1);
    m.begin_element();
    m.binary(4, "schema");
    m.i32(5, static_cast<std::int64_t>(table.columns.size()));
    m.end_struct();
    for (const auto& col : table.columns) {
        m.begin_element();
        m.i32(1, physical_of(col.kind));
        m.i32(3, col.valid.empty() ? 0 : 1);
        m.binary(4, col.name);
        if (col.kind == ColumnKind::String) {
            m.i32(6, 0);  // converted type UTF8
            m.begin_struct(10);
            m.begin_struct(1);  // LogicalType.STRING
            m.end_struct();
            m.end_struct();
        }
        m.end_struct();
    }
    m.i64(3, static_cast<std::int64_t>(table.num_rows));
    m.list(4, T_STRUCT, groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        m.begin_element();
        m.list(1, T_STRUCT, table.columns.size());
        std::int64_t group_bytes = 0;
        for (std::size_t k = 0; k < table.columns.size(); ++k) {
            const auto& rec = groups[g][k];
            group_bytes += rec.size;
            m.begin_element();
            m.i64(2, rec.offset);
            m.begin_struct(3);
            m.i32(1, physical_of(table.columns[k].kind));
            m.list(2, T_I32, 2);
            m.varint(CompactWriter::zigzag(E_PLAIN));
            m.varint(CompactWriter::zigzag(E_RLE));
            m.list(3, T_BINARY, 1);
            m.raw_binary(table.columns[k].name);
            m.i32(4, C_UNCOMPRESSED);
            m.i64(5, rec.values);
            m.i64(6, rec.size);
            m.i64(7, rec.size);
            m.i64(9, rec.offset);
            m.end_struct();
            m.end_struct();
        }
        m.i64(2, group_bytes);
        m.i64(3, static_cast<std::int64_t>(group_rows[g]));
        m.end_struct();
    }
    m.binary(6, options.created_by);
    m.out += static_cast<char>(T_STOP);

    file += m.out;
    put_u32(file, static_cast<std::uint32_t>(m.out.size()));
    file += "PAR1";
    return file;
}

void write_parquet(const std::filesystem::path& path, const ParquetTable& table, const ParquetWriteOptions& options) {
    write_file(path, serialize_parquet(table, options));
}

}  // namespace citeaudit::io
