#ifndef CITEAUDIT_CITEAUDIT_H
#define CITEAUDIT_CITEAUDIT_H

/*
 * C interface to the citation audit toolkit.
 *
 * Every call returns a ca_status. On failure the context keeps a message
 * retrievable with ca_last_error until the next call on that context.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with ca_string_free. A context is not safe for concurrent use;
 * separate contexts are independent.
 */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CA_API __declspec(dllexport)
#else
#define CA_API __attribute__((visibility("default")))
#endif

typedef enum ca_status {
    CA_OK = 0,
    CA_INVALID_ARGUMENT = 1,
    CA_INVALID_URL = 2,
    CA_MALFORMED_PAYLOAD = 3,
    CA_SCHEMA_MISMATCH = 4,
    CA_IO_ERROR = 5,
    CA_CONFIG_INVALID = 6,
    CA_STAGE_INPUT_MISSING = 7,
    CA_BACKEND_UNAVAILABLE = 8,
    CA_MISSING_INPUT = 9,
    CA_MALFORMED_OUTPUT = 10,
    CA_INVALID_LABEL = 11,
    CA_INSUFFICIENT_ANNOTATORS = 12,
    CA_EMPTY_RESPONSE = 13,
    CA_DUPLICATE_URL = 14,
    CA_UNSUPPORTED_FORMAT = 15,
    CA_VALIDATION_FAILED = 16,
    CA_DEGENERATE_MARGINALS = 17,
    CA_NO_VARIATION = 18,
    CA_ZERO_ROW_VARIANCE = 19,
    CA_ZERO_VARIANCE = 20,
    CA_ALL_TIED = 21,
    CA_SINGLE_GROUP = 22,
    CA_INTERNAL = 99
} ca_status;

typedef struct ca_context ca_context;

CA_API const char* ca_version(void);
CA_API const char* ca_status_name(ca_status status);

/* config_path may be NULL for built-in defaults. */
CA_API ca_status ca_context_create(const char* config_path, ca_context** out);
CA_API void ca_context_destroy(ca_context* ctx);
CA_API const char* ca_last_error(const ca_context* ctx);

/* Merges a JSON object into the configuration tree (RFC 7386 merge patch)
 * and revalidates. Relative paths in the patch resolve against the working
 * directory. */
CA_API ca_status ca_context_patch(ca_context* ctx, const char* json_patch);
CA_API ca_status ca_context_set_out_dir(ca_context* ctx, const char* out_dir);
CA_API ca_status ca_context_set_strict(ca_context* ctx, int strict);
CA_API ca_status ca_context_set_force(ca_context* ctx, int force);

/* Effective configuration as JSON, credentials omitted. */
CA_API ca_status ca_config_json(ca_context* ctx, char** out_json);

/* Runs the stages from `first` through `last` inclusive ("extract", "crawl",
 * "judge", "filter", "score", "aggregate", "stats"). The result JSON lists
 * each stage with whether it ran or was skipped and its summary. */
CA_API ca_status ca_run_stages(ca_context* ctx, const char* first, const char* last, char** out_json);

/* Reads a master table (Parquet, JSONL, CSV or TSV), validates every row and
 * writes the full report bundle to out_dir. Without strict mode invalid rows
 * are reported and skipped. */
CA_API ca_status ca_replay(ca_context* ctx, const char* master_path, const char* out_dir, char** out_json);

/* Row validation only. Returns CA_VALIDATION_FAILED when any row is invalid;
 * the report is produced either way. */
CA_API ca_status ca_validate_master(ca_context* ctx, const char* master_path, char** out_json);

/* Rewrites a master table in the format implied by out_path's extension. */
CA_API ca_status ca_convert_master(ca_context* ctx, const char* in_path, const char* out_path);

/* Judge labels against human annotations. The delimited table needs a
 * "judge" column; every other column except "id" is one annotator, and an
 * empty cell is a missing annotation. */
CA_API ca_status ca_validate_judge(ca_context* ctx, const char* table_path, char** out_json);

/* Agreement statistics over a delimited rating table: one column per rater,
 * an optional "id" column is ignored. Numeric statistics are reported when
 * every cell is numeric. */
CA_API ca_status ca_rating_stats(ca_context* ctx, const char* table_path, char** out_json);

/* Both scoring matrices as text grids, with any configured overrides. */
CA_API ca_status ca_matrices(ca_context* ctx, char** out_text);

CA_API void ca_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
