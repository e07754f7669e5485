#pragma once

// Pipeline configuration: one JSON key tree, validated before any stage runs.
//
// {
//   "run_id": "pilot",
//   "paths":      {"responses": "raw.jsonl", "out_dir": "out", "ipa_matrix": "", "ss_matrix": ""},
//   "extract":    {"tracking_params": [...], "window": 2, "provider": ""},
//   "crawl":      {...CrawlConfig keys...},
//   "judge":      {"backend": "mock" | "http", "mock": {...}, "mock_file": "", "http": {...},
//                  "retry_budget": 3, "content_cap": 50000, "concurrency": 8},
//   "filter":     {"min_chars": 20, "min_words": 5},
//   "thresholds": {"ipa": 2, "asf": 2, "ss": 2},
//   "aggregate":  {"density_edges": [5, 10, 15, 20], "weighted_variance": true},
//   "output":     {"master_format": "jsonl" | "parquet" | "csv" | "tsv"}
// }
//
// Relative paths resolve against the config file's directory. The only value
// read from the environment is the judge API key (judge.http.api_key_env),
// which takes precedence over judge.http.api_key.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citeaudit/crawl/crawler.hpp"
#include "citeaudit/extract/extractor.hpp"
#include "citeaudit/filter/evaluability.hpp"
#include "citeaudit/judge/backend.hpp"
#include "citeaudit/judge/classify.hpp"
#include "citeaudit/metrics/metrics.hpp"
#include "citeaudit/taxonomy/score_matrix.hpp"

namespace citeaudit::io {

struct JudgeSettings {
    std::string backend = "mock";
    nlohmann::json mock = nlohmann::json::object();
    std::filesystem::path mock_file;
    judge::HttpBackendConfig http;
    judge::ClassifyOptions classify;
    unsigned concurrency = 8;
};

struct PipelineConfig {
    std::string run_id = "run";
    std::filesystem::path responses;
    std::filesystem::path out_dir = "out";
    std::filesystem::path ipa_matrix;
    std::filesystem::path ss_matrix;
    extract::ExtractOptions extract;
    crawl::CrawlConfig crawl;
    JudgeSettings judge;
    filter::FilterOptions filter;
    metrics::Thresholds thresholds;
    std::vector<std::size_t> density_edges{5, 10, 15, 20};
    bool weighted_variance = true;
    std::string master_format = "jsonl";

    void validate() const;  // ConfigInvalid

    std::filesystem::path master_path() const;
    taxonomy::MatrixSet matrices() const;  // overrides applied
};

// Unknown keys and mistyped values raise ConfigInvalid.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

// Normalised tree without credentials, suitable for hashing and printing.
nlohmann::json to_json(const PipelineConfig& c);

// Resolves credentials from the environment and builds the configured backend.
std::unique_ptr<judge::JudgeBackend> make_backend(const JudgeSettings& s);

}  // namespace citeaudit::io
