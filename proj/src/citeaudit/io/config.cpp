#include "citeaudit/io/config.hpp"

#include <cstdlib>
#include <set>

#include "citeaudit/common/error.hpp"
#include "citeaudit/extract/url.hpp"
#include "citeaudit/io/delimited.hpp"

namespace citeaudit::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
    if (!j.is_object()) fail(ErrorCode::ConfigInvalid, section + " must be an object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, _] : j.items())
        if (!known.count(k)) fail(ErrorCode::ConfigInvalid, "unknown key " + section + "." + k);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

const json& section(const json& root, const char* name) {
    static const json empty = json::object();
    const auto it = root.find(name);
    return it == root.end() ? empty : *it;
}

}  // namespace

void PipelineConfig::validate() const {
    if (run_id.empty()) fail(ErrorCode::ConfigInvalid, "run_id must not be empty");
    if (out_dir.empty()) fail(ErrorCode::ConfigInvalid, "paths.out_dir must not be empty");
    crawl.validate();
    metrics::validate(thresholds);
    if (judge.backend != "mock" && judge.backend != "http")
        fail(ErrorCode::ConfigInvalid, "judge.backend must be mock or http");
    if (judge.classify.retry_budget < 1) fail(ErrorCode::ConfigInvalid, "judge.retry_budget must be >= 1");
    if (judge.classify.content_cap == 0) fail(ErrorCode::ConfigInvalid, "judge.content_cap must be positive");
    if (judge.concurrency == 0) fail(ErrorCode::ConfigInvalid, "judge.concurrency must be positive");
    if (filter.min_chars == 0 || filter.min_words == 0)
        fail(ErrorCode::ConfigInvalid, "filter thresholds must be positive");
    if (extract.window == 0) fail(ErrorCode::ConfigInvalid, "extract.window must be positive");
    for (std::size_t i = 0; i < density_edges.size(); ++i)
        if (density_edges[i] == 0 || (i && density_edges[i] <= density_edges[i - 1]))
            fail(ErrorCode::ConfigInvalid, "aggregate.density_edges must be positive and increasing");
    static const std::set<std::string> formats{"jsonl", "parquet", "csv", "tsv"};
    if (!formats.count(master_format)) fail(ErrorCode::ConfigInvalid, "output.master_format " + master_format);
}

fs::path PipelineConfig::master_path() const { return out_dir / ("master." + master_format); }

taxonomy::MatrixSet PipelineConfig::matrices() const {
    auto ipa = ipa_matrix.empty() ? taxonomy::default_ipa_matrix()
                                  : taxonomy::load_matrix_file(ipa_matrix.string(), taxonomy::default_ipa_matrix());
    auto ss = ss_matrix.empty() ? taxonomy::default_ss_matrix()
                                : taxonomy::load_matrix_file(ss_matrix.string(), taxonomy::default_ss_matrix());
    return taxonomy::MatrixSet(std::move(ipa), std::move(ss));
}

PipelineConfig config_from_json(const json& root, const fs::path& base) {
    PipelineConfig c;
    try {
        only_keys(root, "config",
                  {"run_id", "paths", "extract", "crawl", "judge", "filter", "thresholds", "aggregate", "output"});
        c.run_id = root.value("run_id", c.run_id);

        const auto& paths = section(root, "paths");
        only_keys(paths, "paths", {"responses", "out_dir", "ipa_matrix", "ss_matrix"});
        c.responses = resolve(base, paths.value("responses", ""));
        c.out_dir = resolve(base, paths.value("out_dir", "out"));
        c.ipa_matrix = resolve(base, paths.value("ipa_matrix", ""));
        c.ss_matrix = resolve(base, paths.value("ss_matrix", ""));

        const auto& ex = section(root, "extract");
        only_keys(ex, "extract", {"tracking_params", "window", "provider"});
        c.extract.tracking_params = ex.value("tracking_params", std::vector<std::string>{});
        c.extract.window = ex.value("window", c.extract.window);
        if (const auto p = ex.value("provider", std::string()); !p.empty()) {
            c.extract.forced_provider = extract::parse_provider(p);
            if (!c.extract.forced_provider) fail(ErrorCode::ConfigInvalid, "unknown extract.provider " + p);
        }

        c.crawl = crawl::crawl_config_from_json(section(root, "crawl"));

        const auto& jd = section(root, "judge");
        only_keys(jd, "judge", {"backend", "mock", "mock_file", "http", "retry_budget", "content_cap", "concurrency"});
        c.judge.backend = jd.value("backend", c.judge.backend);
        c.judge.mock = jd.value("mock", json::object());
        c.judge.mock_file = resolve(base, jd.value("mock_file", ""));
        c.judge.classify.retry_budget = jd.value("retry_budget", c.judge.classify.retry_budget);
        c.judge.classify.content_cap = jd.value("content_cap", c.judge.classify.content_cap);
        c.judge.concurrency = jd.value("concurrency", c.judge.concurrency);
        const auto& http = section(jd, "http");
        only_keys(http, "judge.http",
                  {"endpoint", "model", "temperature", "max_tokens", "requests_per_minute", "timeout_seconds",
                   "api_key_env", "api_key"});
        auto& h = c.judge.http;
        h.endpoint = http.value("endpoint", h.endpoint);
        h.model = http.value("model", h.model);
        h.temperature = http.value("temperature", h.temperature);
        h.max_tokens = http.value("max_tokens", h.max_tokens);
        h.requests_per_minute = http.value("requests_per_minute", h.requests_per_minute);
        h.timeout_seconds = http.value("timeout_seconds", h.timeout_seconds);
        h.api_key_env = http.value("api_key_env", h.api_key_env);
        h.api_key = http.value("api_key", h.api_key);

        const auto& fl = section(root, "filter");
        only_keys(fl, "filter", {"min_chars", "min_words"});
        c.filter.min_chars = fl.value("min_chars", c.filter.min_chars);
        c.filter.min_words = fl.value("min_words", c.filter.min_words);

        const auto& th = section(root, "thresholds");
        only_keys(th, "thresholds", {"ipa", "asf", "ss"});
        c.thresholds.ipa = th.value("ipa", c.thresholds.ipa);
        c.thresholds.asf = th.value("asf", c.thresholds.asf);
        c.thresholds.ss = th.value("ss", c.thresholds.ss);

        const auto& ag = section(root, "aggregate");
        only_keys(ag, "aggregate", {"density_edges", "weighted_variance"});
        c.density_edges = ag.value("density_edges", c.density_edges);
        c.weighted_variance = ag.value("weighted_variance", c.weighted_variance);

        const auto& out = section(root, "output");
        only_keys(out, "output", {"master_format"});
        c.master_format = out.value("master_format", c.master_format);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

json to_json(const PipelineConfig& c) {
    const auto& h = c.judge.http;
    return {{"run_id", c.run_id},
            {"paths",
             {{"responses", c.responses.string()},
              {"out_dir", c.out_dir.string()},
              {"ipa_matrix", c.ipa_matrix.string()},
              {"ss_matrix", c.ss_matrix.string()}}},
            {"extract",
             {{"tracking_params",
               c.extract.tracking_params.empty() ? extract::default_tracking_params() : c.extract.tracking_params},
              {"window", c.extract.window},
              {"provider", c.extract.forced_provider ? std::string(extract::to_string(*c.extract.forced_provider))
                                                     : std::string()}}},
            {"crawl", crawl::to_json(c.crawl)},
            {"judge",
             {{"backend", c.judge.backend},
              {"mock", c.judge.mock},
              {"mock_file", c.judge.mock_file.string()},
              {"http",
               {{"endpoint", h.endpoint},
                {"model", h.model},
                {"temperature", h.temperature},
                {"max_tokens", h.max_tokens},
                {"requests_per_minute", h.requests_per_minute},
                {"timeout_seconds", h.timeout_seconds},
                {"api_key_env", h.api_key_env}}},
              {"retry_budget", c.judge.classify.retry_budget},
              {"content_cap", c.judge.classify.content_cap},
              {"concurrency", c.judge.concurrency}}},
            {"filter", {{"min_chars", c.filter.min_chars}, {"min_words", c.filter.min_words}}},
            {"thresholds", {{"ipa", c.thresholds.ipa}, {"asf", c.thresholds.asf}, {"ss", c.thresholds.ss}}},
            {"aggregate", {{"density_edges", c.density_edges}, {"weighted_variance", c.weighted_variance}}},
            {"output", {{"master_format", c.master_format}}}};
}

std::unique_ptr<judge::JudgeBackend> make_backend(const JudgeSettings& s) {
    if (s.backend == "mock") {
        // MockBackend is not movable; the factory result initialises the heap object directly.
        if (!s.mock_file.empty())
            return std::unique_ptr<judge::JudgeBackend>(new judge::MockBackend(judge::MockBackend::from_file(s.mock_file)));
        return std::unique_ptr<judge::JudgeBackend>(new judge::MockBackend(judge::MockBackend::from_json(s.mock)));
    }
    auto cfg = s.http;
    if (const char* env = std::getenv(cfg.api_key_env.c_str()); env && *env) cfg.api_key = env;
    if (cfg.api_key.empty())
        fail(ErrorCode::ConfigInvalid, "no API key: set " + cfg.api_key_env + " or judge.http.api_key");
    return std::make_unique<judge::HttpBackend>(cfg);
}

}  // namespace citeaudit::io
