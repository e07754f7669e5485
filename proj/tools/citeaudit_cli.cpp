// citeaudit command line. Links only the C interface.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citeaudit/citeaudit.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitStage = 2;

int exit_code(ca_status s) {
    switch (s) {
        case CA_OK: return kExitOk;
        case CA_VALIDATION_FAILED:
        case CA_SCHEMA_MISMATCH:
        case CA_INVALID_LABEL:
        case CA_CONFIG_INVALID:
        case CA_INVALID_ARGUMENT: return kExitValidation;
        default: return kExitStage;
    }
}

class Context {
public:
    ~Context() { ca_context_destroy(ctx_); }
    ca_context* get() const { return ctx_; }
    ca_context** out() { return &ctx_; }

private:
    ca_context* ctx_ = nullptr;
};

// Prints the owned string (if any) and maps the status to an exit code.
int report(ca_context* ctx, ca_status s, char* text) {
    if (text) {
        std::cout << text << "\n";
        ca_string_free(text);
    }
    if (s != CA_OK) std::cerr << "citeaudit: " << ca_last_error(ctx) << "\n";
    return exit_code(s);
}

// Sequences the call before reading the string it fills.
template <typename F>
int finish(ca_context* ctx, F&& call, char*& text) {
    const ca_status s = call();
    return report(ctx, s, text);
}

template <typename T>
void set_if(json& patch, std::initializer_list<const char*> path, const std::optional<T>& v) {
    if (!v) return;
    json* node = &patch;
    for (const char* p : path) node = &(*node)[p];
    *node = *v;
}

struct Thresholds {
    std::optional<int> ipa, asf, ss;
    void add(CLI::App* app) {
        app->add_option("--t-ipa", ipa, "IPA failure threshold (fail when score <= t)");
        app->add_option("--t-asf", asf, "ASF failure threshold");
        app->add_option("--t-ss", ss, "SS failure threshold");
    }
    void patch(json& j) const {
        set_if(j, {"thresholds", "ipa"}, ipa);
        set_if(j, {"thresholds", "asf"}, asf);
        set_if(j, {"thresholds", "ss"}, ss);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Citation source-quality audit pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(ca_version()));

    std::string config_path, out_dir;
    bool strict = false, force = false;
    app.add_option("--config", config_path, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
    app.add_flag("--strict", strict, "Treat row-level validation problems as fatal");
    app.add_option("--out-dir", out_dir, "Output directory (overrides paths.out_dir)");
    app.add_flag("--force", force, "Rerun stages even when the manifest says they are current");

    json patch = json::object();
    Thresholds thresholds;

    // extract
    auto* extract = app.add_subcommand("extract", "Normalize citations from raw provider responses");
    std::optional<std::string> responses, forced_provider;
    std::optional<std::size_t> window;
    std::optional<std::vector<std::string>> tracking;
    extract->add_option("--responses", responses, "Raw responses (JSON lines)");
    extract->add_option("--window", window, "Sentences attributed to an inline marker");
    extract->add_option("--provider", forced_provider, "Treat every response as this provider");
    extract->add_option("--tracking-param", tracking, "Query parameter stripped from URLs (repeatable)");

    // crawl
    auto* crawl = app.add_subcommand("crawl", "Fetch and extract the cited pages");
    std::optional<std::string> user_agent;
    std::optional<unsigned> concurrency;
    std::optional<double> delay, fetch_timeout, redirect_timeout;
    std::optional<std::size_t> content_cap, min_content;
    bool no_render = false, no_robots = false;
    std::vector<std::string> host_overrides;
    crawl->add_option("--user-agent", user_agent, "Crawler identification string");
    crawl->add_option("--concurrency", concurrency, "Global concurrent fetches");
    crawl->add_option("--per-domain-delay", delay, "Seconds between requests to one domain");
    crawl->add_option("--fetch-timeout", fetch_timeout, "Seconds for the terminal page");
    crawl->add_option("--redirect-timeout", redirect_timeout, "Seconds for the whole redirect chain");
    crawl->add_option("--content-cap", content_cap, "Maximum extracted characters");
    crawl->add_option("--min-content", min_content, "Minimum extracted characters");
    crawl->add_flag("--no-render", no_render, "Skip the rendering tier");
    crawl->add_flag("--no-robots", no_robots, "Ignore robots.txt");
    crawl->add_option("--host-override", host_overrides, "host=ip:port (repeatable)");

    // judge
    auto* judge = app.add_subcommand("judge", "Label citations with the judge model");
    std::optional<std::string> backend, mock_rules, endpoint, model;
    std::optional<double> rpm;
    std::optional<int> retry_budget;
    std::optional<unsigned> judge_concurrency;
    judge->add_option("--backend", backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    judge->add_option("--mock-rules", mock_rules, "Mock rule file (JSON)");
    judge->add_option("--endpoint", endpoint, "Chat-completion endpoint URL");
    judge->add_option("--model", model, "Judge model name");
    judge->add_option("--rate-limit", rpm, "Requests per minute (0 = unlimited)");
    judge->add_option("--retry-budget", retry_budget, "Attempts per judge task");
    judge->add_option("--concurrency", judge_concurrency, "Concurrent judge requests");

    // filter
    auto* filter = app.add_subcommand("filter", "Drop citations that cannot be evaluated");
    std::optional<std::size_t> min_chars, min_words;
    filter->add_option("--min-chars", min_chars, "Minimum sentence length");
    filter->add_option("--min-words", min_words, "Minimum word count");

    // score
    auto* score = app.add_subcommand("score", "Write the scored master table");
    std::optional<std::string> format, ipa_matrix, ss_matrix;
    score->add_option("--format", format, "jsonl, parquet, csv or tsv")
        ->check(CLI::IsMember({"jsonl", "parquet", "csv", "tsv"}));

    // aggregate / stats
    auto* aggregate = app.add_subcommand("aggregate", "Failure rates by pool, response, model and provider");
    thresholds.add(aggregate);
    auto* stats = app.add_subcommand("stats", "Distribution, variance and agreement statistics");
    thresholds.add(stats);
    std::optional<std::string> ratings;
    bool unweighted = false;
    stats->add_option("--ratings", ratings, "Rating table (delimited text); computes agreement statistics only")
        ->check(CLI::ExistingFile);
    stats->add_flag("--unweighted", unweighted, "Weight model means equally in the variance decomposition");

    // run
    auto* run = app.add_subcommand("run", "Run a contiguous range of stages");
    std::string from = "extract", to = "stats";
    run->add_option("--from", from, "First stage");
    run->add_option("--to", to, "Last stage");

    // replay
    auto* replay = app.add_subcommand("replay", "Recompute every report from a master table");
    std::string master, reports;
    replay->add_option("master", master, "Master table (parquet, jsonl, csv, tsv)")->required()->check(CLI::ExistingFile);
    replay->add_option("--reports", reports, "Report directory (default: <out-dir>/replay)");
    thresholds.add(replay);
    replay->add_flag("--unweighted", unweighted, "Weight model means equally in the variance decomposition");

    auto* validate = app.add_subcommand("validate", "Check every row of a master table");
    std::string validate_path;
    validate->add_option("master", validate_path, "Master table")->required()->check(CLI::ExistingFile);

    auto* convert = app.add_subcommand("convert", "Rewrite a master table in another format");
    std::string convert_in, convert_out;
    convert->add_option("input", convert_in, "Master table")->required()->check(CLI::ExistingFile);
    convert->add_option("output", convert_out, "Destination; format from the extension")->required();

    auto* validate_judge = app.add_subcommand("validate-judge", "Agreement between judge labels and annotators");
    std::string judge_table;
    validate_judge->add_option("table", judge_table, "Delimited table with a judge column and annotator columns")
        ->required()
        ->check(CLI::ExistingFile);

    auto* matrices = app.add_subcommand("matrices", "Print the two scoring matrices");
    for (auto* sub : {score, aggregate, stats, matrices, replay, validate, convert}) {
        sub->add_option("--ipa-matrix", ipa_matrix, "Alignment matrix override file");
        sub->add_option("--ss-matrix", ss_matrix, "Suitability matrix override file");
    }

    auto* show_config = app.add_subcommand("config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    set_if(patch, {"paths", "responses"}, responses);
    set_if(patch, {"extract", "window"}, window);
    set_if(patch, {"extract", "provider"}, forced_provider);
    set_if(patch, {"extract", "tracking_params"}, tracking);
    set_if(patch, {"crawl", "user_agent"}, user_agent);
    set_if(patch, {"crawl", "global_concurrency"}, concurrency);
    set_if(patch, {"crawl", "per_domain_delay"}, delay);
    set_if(patch, {"crawl", "fetch_timeout"}, fetch_timeout);
    set_if(patch, {"crawl", "redirect_timeout"}, redirect_timeout);
    set_if(patch, {"crawl", "content_cap"}, content_cap);
    set_if(patch, {"crawl", "min_content_length"}, min_content);
    if (no_render) patch["crawl"]["render"] = false;
    if (no_robots) patch["crawl"]["respect_robots"] = false;
    for (const auto& h : host_overrides) {
        const auto eq = h.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == h.size()) {
            std::cerr << "citeaudit: --host-override expects host=ip:port, got " << h << "\n";
            return kExitValidation;
        }
        patch["crawl"]["host_overrides"][h.substr(0, eq)] = h.substr(eq + 1);
    }
    set_if(patch, {"judge", "backend"}, backend);
    set_if(patch, {"judge", "mock_file"}, mock_rules);
    set_if(patch, {"judge", "http", "endpoint"}, endpoint);
    set_if(patch, {"judge", "http", "model"}, model);
    set_if(patch, {"judge", "http", "requests_per_minute"}, rpm);
    set_if(patch, {"judge", "retry_budget"}, retry_budget);
    set_if(patch, {"judge", "concurrency"}, judge_concurrency);
    set_if(patch, {"filter", "min_chars"}, min_chars);
    set_if(patch, {"filter", "min_words"}, min_words);
    set_if(patch, {"output", "master_format"}, format);
    set_if(patch, {"paths", "ipa_matrix"}, ipa_matrix);
    set_if(patch, {"paths", "ss_matrix"}, ss_matrix);
    if (unweighted) patch["aggregate"]["weighted_variance"] = false;
    thresholds.patch(patch);

    Context ctx;
    ca_status s = ca_context_create(config_path.empty() ? nullptr : config_path.c_str(), ctx.out());
    if (s != CA_OK) return report(ctx.get(), s, nullptr);
    if (!patch.empty() && (s = ca_context_patch(ctx.get(), patch.dump().c_str())) != CA_OK)
        return report(ctx.get(), s, nullptr);
    if (!out_dir.empty() && (s = ca_context_set_out_dir(ctx.get(), out_dir.c_str())) != CA_OK)
        return report(ctx.get(), s, nullptr);
    ca_context_set_strict(ctx.get(), strict ? 1 : 0);
    ca_context_set_force(ctx.get(), force ? 1 : 0);

    char* text = nullptr;
    const std::map<CLI::App*, const char*> stage_commands{{extract, "extract"}, {crawl, "crawl"},
                                                          {judge, "judge"},     {filter, "filter"},
                                                          {score, "score"},     {aggregate, "aggregate"}};
    for (const auto& [sub, name] : stage_commands)
        if (sub->parsed()) return finish(ctx.get(), [&] { return ca_run_stages(ctx.get(), name, name, &text); }, text);

    if (stats->parsed()) {
        if (ratings) return finish(ctx.get(), [&] { return ca_rating_stats(ctx.get(), ratings->c_str(), &text); }, text);
        return finish(ctx.get(), [&] { return ca_run_stages(ctx.get(), "stats", "stats", &text); }, text);
    }
    if (run->parsed()) return finish(ctx.get(), [&] { return ca_run_stages(ctx.get(), from.c_str(), to.c_str(), &text); }, text);
    if (replay->parsed()) {
        if (reports.empty()) {
            char* cfg = nullptr;
            ca_config_json(ctx.get(), &cfg);
            reports = json::parse(cfg)["paths"]["out_dir"].get<std::string>() + "/replay";
            ca_string_free(cfg);
        }
        return finish(ctx.get(), [&] { return ca_replay(ctx.get(), master.c_str(), reports.c_str(), &text); }, text);
    }
    if (validate->parsed())
        return finish(ctx.get(), [&] { return ca_validate_master(ctx.get(), validate_path.c_str(), &text); }, text);
    if (convert->parsed())
        return finish(ctx.get(), [&] { return ca_convert_master(ctx.get(), convert_in.c_str(), convert_out.c_str()); }, text);
    if (validate_judge->parsed())
        return finish(ctx.get(), [&] { return ca_validate_judge(ctx.get(), judge_table.c_str(), &text); }, text);
    if (matrices->parsed()) return finish(ctx.get(), [&] { return ca_matrices(ctx.get(), &text); }, text);
    if (show_config->parsed()) return finish(ctx.get(), [&] { return ca_config_json(ctx.get(), &text); }, text);
    return kExitValidation;
}
