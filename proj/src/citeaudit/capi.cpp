#include "citeaudit/citeaudit.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/io/config.hpp"
#include "citeaudit/io/delimited.hpp"
#include "citeaudit/io/master.hpp"
#include "citeaudit/io/pipeline.hpp"
#include "citeaudit/io/replay.hpp"
#include "citeaudit/judge/reliability.hpp"
#include "citeaudit/stats/stats.hpp"

using namespace citeaudit;
namespace fs = std::filesystem;
using nlohmann::json;

struct ca_context {
    io::PipelineConfig config;
    bool strict = false;
    bool force = false;
    std::string error;
};

namespace {

ca_status status_of(ErrorCode c) { return static_cast<ca_status>(static_cast<int>(c) + 1); }

template <typename F>
ca_status guarded(ca_context* ctx, F&& body) {
    if (!ctx) return CA_INVALID_ARGUMENT;
    ctx->error.clear();
    try {
        return body();
    } catch (const Error& e) {
        ctx->error = e.what();
        return status_of(e.code());
    } catch (const json::exception& e) {
        ctx->error = std::string("MalformedPayload: ") + e.what();
        return CA_MALFORMED_PAYLOAD;
    } catch (const fs::filesystem_error& e) {
        ctx->error = std::string("Io: ") + e.what();
        return CA_IO_ERROR;
    } catch (const std::exception& e) {
        ctx->error = std::string("internal: ") + e.what();
        return CA_INTERNAL;
    } catch (...) {
        ctx->error = "internal: unknown exception";
        return CA_INTERNAL;
    }
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

std::string arg(const char* s, const char* what) {
    if (!s || !*s) fail(ErrorCode::InvalidArgument, std::string(what) + " is required");
    return s;
}

io::Stage stage_arg(const char* s, const char* what) {
    const auto st = io::parse_stage(arg(s, what));
    if (!st) fail(ErrorCode::InvalidArgument, std::string("unknown stage ") + s);
    return *st;
}

io::MasterReadOptions read_options(const ca_context& ctx) {
    io::MasterReadOptions o;
    o.strict = ctx.strict;
    o.matrices = ctx.config.matrices();
    return o;
}

json violations_json(const io::MasterReadResult& r, std::size_t limit = 100) {
    json v = json::array();
    for (std::size_t i = 0; i < r.violations.size() && i < limit; ++i) v.push_back(io::to_json(r.violations[i]));
    return v;
}

std::optional<double> as_number(const std::string& s) {
    const auto t = std::string(text::trim(s));
    if (t.empty()) return std::nullopt;
    double v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    return v;
}

// Runs one statistic; undefined results become null with the reason.
json stat(const std::function<double()>& f) {
    try {
        const double v = f();
        return std::isfinite(v) ? json(v) : json(nullptr);
    } catch (const Error& e) {
        return json{{"error", e.what()}};
    }
}

struct RaterTable {
    std::vector<std::string> raters;
    std::vector<std::vector<std::optional<std::string>>> cells;  // items x raters
};

RaterTable rater_table(const io::DelimitedTable& t, const std::string& skip_extra = "") {
    RaterTable out;
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        const auto name = text::to_lower(std::string(text::trim(t.header[c])));
        if (name == "id" || (!skip_extra.empty() && name == skip_extra)) continue;
        out.raters.push_back(t.header[c]);
        idx.push_back(c);
    }
    for (const auto& row : t.rows) {
        std::vector<std::optional<std::string>> cells;
        for (auto c : idx) {
            const auto v = std::string(text::trim(row[c]));
            cells.push_back(v.empty() ? std::nullopt : std::optional<std::string>(v));
        }
        out.cells.push_back(std::move(cells));
    }
    return out;
}

}  // namespace

extern "C" {

const char* ca_version(void) { return "1.0.0"; }

const char* ca_status_name(ca_status status) {
    if (status == CA_OK) return "Ok";
    if (status == CA_INTERNAL) return "Internal";
    const int k = static_cast<int>(status) - 1;
    if (k < 0 || k > static_cast<int>(ErrorCode::SingleGroup)) return "Unknown";
    return to_string(static_cast<ErrorCode>(k)).data();
}

ca_status ca_context_create(const char* config_path, ca_context** out) {
    if (!out) return CA_INVALID_ARGUMENT;
    *out = nullptr;
    auto* ctx = new ca_context;
    const auto st = guarded(ctx, [&] {
        if (config_path && *config_path) ctx->config = io::load_config(config_path);
        ctx->config.validate();
        return CA_OK;
    });
    *out = ctx;  // kept on failure so the caller can read the error
    return st;
}

void ca_context_destroy(ca_context* ctx) { delete ctx; }

const char* ca_last_error(const ca_context* ctx) { return ctx ? ctx->error.c_str() : "null context"; }

ca_status ca_context_patch(ca_context* ctx, const char* json_patch) {
    return guarded(ctx, [&] {
        json patch;
        try {
            patch = json::parse(arg(json_patch, "patch"));
        } catch (const json::exception& e) {
            fail(ErrorCode::ConfigInvalid, std::string("patch: ") + e.what());
        }
        if (!patch.is_object()) fail(ErrorCode::ConfigInvalid, "patch must be a JSON object");
        auto tree = io::to_json(ctx->config);
        tree.merge_patch(patch);
        const auto key = ctx->config.judge.http.api_key;
        auto next = io::config_from_json(tree);
        next.judge.http.api_key = key;
        ctx->config = std::move(next);
        return CA_OK;
    });
}

ca_status ca_context_set_out_dir(ca_context* ctx, const char* out_dir) {
    return guarded(ctx, [&] {
        ctx->config.out_dir = arg(out_dir, "out_dir");
        return CA_OK;
    });
}

ca_status ca_context_set_strict(ca_context* ctx, int strict) {
    return guarded(ctx, [&] {
        ctx->strict = strict != 0;
        return CA_OK;
    });
}

ca_status ca_context_set_force(ca_context* ctx, int force) {
    return guarded(ctx, [&] {
        ctx->force = force != 0;
        return CA_OK;
    });
}

ca_status ca_config_json(ca_context* ctx, char** out_json) {
    return guarded(ctx, [&] {
        emit(out_json, io::to_json(ctx->config).dump(2));
        return CA_OK;
    });
}

ca_status ca_run_stages(ca_context* ctx, const char* first, const char* last, char** out_json) {
    return guarded(ctx, [&] {
        const auto stages = io::stage_range(stage_arg(first, "first stage"), stage_arg(last, "last stage"));
        io::RunOptions o;
        o.strict = ctx->strict;
        o.force = ctx->force;
        const auto res = io::run_pipeline(ctx->config, stages, o);
        json out{{"manifest", res.manifest.string()}, {"stages", json::array()}};
        for (const auto& s : res.stages) {
            json files = json::array();
            for (const auto& f : s.outputs) files.push_back(f.string());
            out["stages"].push_back({{"stage", io::to_string(s.stage)},
                                     {"action", s.skipped ? "skipped" : "ran"},
                                     {"outputs", files},
                                     {"summary", s.summary}});
        }
        emit(out_json, out.dump(2));
        return CA_OK;
    });
}

ca_status ca_replay(ca_context* ctx, const char* master_path, const char* out_dir, char** out_json) {
    return guarded(ctx, [&] {
        const auto ro = read_options(*ctx);
        const auto read = io::read_master(arg(master_path, "master path"), ro);
        if (read.records.empty()) fail(ErrorCode::ValidationFailed, "no valid rows in " + std::string(master_path));
        io::ReplayOptions opts;
        opts.thresholds = ctx->config.thresholds;
        opts.density_edges = ctx->config.density_edges;
        opts.weighted_variance = ctx->config.weighted_variance;
        opts.matrices = ro.matrices;
        const auto rep = io::replay(read.records, opts);
        const auto files = io::write_replay_bundle(arg(out_dir, "out_dir"), rep);
        json list = json::array();
        for (const auto& f : files) list.push_back(f.string());
        json out{{"rows_read", read.rows_read},
                 {"rows_valid", read.records.size()},
                 {"violations", read.violations.size()},
                 {"first_violations", violations_json(read, 20)},
                 {"summary", io::headline_summary(rep)},
                 {"files", list}};
        emit(out_json, out.dump(2));
        return CA_OK;
    });
}

ca_status ca_validate_master(ca_context* ctx, const char* master_path, char** out_json) {
    return guarded(ctx, [&] {
        auto ro = read_options(*ctx);
        ro.strict = false;
        const auto read = io::read_master(arg(master_path, "master path"), ro);
        json out{{"rows_read", read.rows_read},
                 {"rows_valid", read.records.size()},
                 {"violations", read.violations.size()},
                 {"details", violations_json(read, read.violations.size())}};
        emit(out_json, out.dump(2));
        if (!read.violations.empty()) {
            ctx->error = "ValidationFailed: " + std::to_string(read.violations.size()) + " invalid rows";
            return CA_VALIDATION_FAILED;
        }
        return CA_OK;
    });
}

ca_status ca_convert_master(ca_context* ctx, const char* in_path, const char* out_path) {
    return guarded(ctx, [&] {
        const auto read = io::read_master(arg(in_path, "input path"), read_options(*ctx));
        io::write_master(arg(out_path, "output path"), read.records);
        return CA_OK;
    });
}

ca_status ca_validate_judge(ca_context* ctx, const char* table_path, char** out_json) {
    return guarded(ctx, [&] {
        const auto table = io::read_table(arg(table_path, "table path"));
        const auto jcol = table.column("judge");
        if (jcol < 0) fail(ErrorCode::SchemaMismatch, "no judge column in " + std::string(table_path));
        std::vector<std::string> judge;
        for (const auto& row : table.rows) {
            const auto v = std::string(text::trim(row[static_cast<std::size_t>(jcol)]));
            if (v.empty()) fail(ErrorCode::MissingInput, "empty judge label");
            judge.push_back(v);
        }
        const auto raters = rater_table(table, "judge");
        const auto rep = judge::validate_against_humans(judge, raters.cells);
        auto out = judge::to_json(rep);
        out["annotator_columns"] = raters.raters;
        emit(out_json, out.dump(2));
        return CA_OK;
    });
}

ca_status ca_rating_stats(ca_context* ctx, const char* table_path, char** out_json) {
    return guarded(ctx, [&] {
        const auto t = rater_table(io::read_table(arg(table_path, "table path")));
        const auto k = t.raters.size();
        if (k < 2) fail(ErrorCode::InsufficientAnnotators, "need at least two rater columns");
        json out{{"items", t.cells.size()}, {"raters", t.raters}};
        out["alpha_nominal"] = stat([&] { return stats::krippendorff_alpha_nominal(t.cells); });

        double kappa_sum = 0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                std::vector<std::string> x, y;
                for (const auto& row : t.cells)
                    if (row[a] && row[b]) {
                        x.push_back(*row[a]);
                        y.push_back(*row[b]);
                    }
                const auto v = stat([&] { return stats::cohen_kappa(x, y); });
                if (v.is_number()) {
                    kappa_sum += v.get<double>();
                    ++pairs;
                }
                if (k == 2) out["kappa"] = v;
            }
        out["mean_pairwise_kappa"] = pairs ? json(kappa_sum / double(pairs)) : json(nullptr);

        std::vector<double> values;
        bool numeric = true;
        for (const auto& row : t.cells)
            for (const auto& c : row) {
                const auto v = c ? as_number(*c) : std::nullopt;
                if (!v) numeric = false;
                else values.push_back(*v);
            }
        out["numeric"] = numeric;
        if (numeric && !t.cells.empty()) {
            try {
                const auto icc = stats::icc_2k(stats::RatingsGrid(t.cells.size(), k, values));
                out["icc_2k"] = {{"icc", icc.icc},         {"icc_single", icc.icc_single}, {"ci_low", icc.ci_low},
                                 {"ci_high", icc.ci_high}, {"ms_rows", icc.ms_rows},       {"ms_cols", icc.ms_cols},
                                 {"ms_error", icc.ms_error}};
            } catch (const Error& e) {
                out["icc_2k"] = {{"error", e.what()}};
            }
            if (k == 2) {
                std::vector<double> x, y;
                for (std::size_t i = 0; i < t.cells.size(); ++i) {
                    x.push_back(values[2 * i]);
                    y.push_back(values[2 * i + 1]);
                }
                out["pearson_r"] = stat([&] { return stats::pearson_r(x, y); });
                out["spearman_rho"] = stat([&] { return stats::spearman_rho(x, y); });
                out["kendall_tau_b"] = stat([&] { return stats::kendall_tau_b(x, y); });
                out["ccc"] = stat([&] { return stats::concordance_ccc(x, y); });
                out["mean_absolute_deviation"] = stat([&] { return stats::mean_absolute_deviation(x, y); });
            }
        }
        emit(out_json, out.dump(2));
        return CA_OK;
    });
}

ca_status ca_matrices(ca_context* ctx, char** out_text) {
    return guarded(ctx, [&] {
        const auto m = ctx->config.matrices();
        emit(out_text, "Intent x Purpose alignment (QI rows, SP columns)\n" + m.ipa().to_grid_text() +
                           "\nDomain x Type suitability (SD rows, ST columns)\n" + m.ss().to_grid_text());
        return CA_OK;
    });
}

void ca_string_free(char* s) { std::free(s); }

}  // extern "C"
