#include "citeaudit/io/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/hash.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/io/delimited.hpp"
#include "citeaudit/io/master.hpp"
#include "citeaudit/io/replay.hpp"
#include "citeaudit/judge/orchestrator.hpp"

namespace citeaudit::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Extract: return "extract";
        case Stage::Crawl: return "crawl";
        case Stage::Judge: return "judge";
        case Stage::Filter: return "filter";
        case Stage::Score: return "score";
        case Stage::Aggregate: return "aggregate";
        case Stage::Stats: return "stats";
    }
    return "extract";
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
    for (auto s : kAllStages)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

std::vector<Stage> stage_range(Stage from, Stage to) {
    if (static_cast<int>(from) > static_cast<int>(to))
        fail(ErrorCode::ConfigInvalid, std::string("stage ") + std::string(to_string(from)) + " comes after " +
                                           std::string(to_string(to)));
    std::vector<Stage> out;
    for (int k = static_cast<int>(from); k <= static_cast<int>(to); ++k) out.push_back(static_cast<Stage>(k));
    return out;
}

namespace {

fs::path citations_path(const PipelineConfig& c) { return c.out_dir / "citations.jsonl"; }
fs::path extract_report_path(const PipelineConfig& c) { return c.out_dir / "extract_report.json"; }
fs::path sources_path(const PipelineConfig& c) { return c.out_dir / "sources.jsonl"; }
fs::path judged_path(const PipelineConfig& c) { return c.out_dir / "judged.jsonl"; }
fs::path evaluable_path(const PipelineConfig& c) { return c.out_dir / "evaluable.jsonl"; }
fs::path reports_dir(const PipelineConfig& c) { return c.out_dir / "reports"; }

std::vector<json> read_jsonl(const fs::path& path) {
    std::vector<json> out;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(read_file(path), '\n')) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            fail(ErrorCode::MalformedPayload, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

template <typename T, typename F>
std::string to_jsonl(const std::vector<T>& items, F&& conv) {
    std::string out;
    for (const auto& it : items) {
        out += conv(it).dump();
        out += '\n';
    }
    return out;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string rel(const PipelineConfig& c, const fs::path& p) {
    const auto r = p.lexically_relative(c.out_dir);
    return (r.empty() || *r.begin() == "..") ? p.string() : r.generic_string();
}

std::vector<extract::NormalizedCitation> load_citations(const PipelineConfig& c) {
    std::vector<extract::NormalizedCitation> out;
    for (const auto& j : read_jsonl(citations_path(c))) out.push_back(extract::citation_from_json(j));
    return out;
}

std::vector<crawl::CrawlOutcome> load_sources(const PipelineConfig& c) {
    std::vector<crawl::CrawlOutcome> out;
    for (const auto& j : read_jsonl(sources_path(c))) out.push_back(crawl::outcome_from_json(j));
    return out;
}

bool is_pdf(const crawl::CrawlOutcome& o) {
    if (o.failure != crawl::FailureCategory::FileFormat) return false;
    if (text::contains_ci(o.failure_detail, "pdf")) return true;
    const auto path = text::to_lower(o.url.substr(0, o.url.find_first_of("?#")));
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".pdf") == 0;
}

// ---- stages ---------------------------------------------------------------------

json run_extract(const PipelineConfig& c, const RunOptions& o, std::vector<fs::path>& outputs) {
    std::ifstream in(c.responses, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + c.responses.string());
    auto res = extract::extract_jsonl(in, c.extract);
    if (o.strict && res.stats.malformed_responses > 0)
        fail(ErrorCode::ValidationFailed, std::to_string(res.stats.malformed_responses) + " malformed responses" +
                                              (res.stats.issues.empty() ? "" : ": " + res.stats.issues.front()));
    write_file(citations_path(c), to_jsonl(res.citations, [](const auto& x) { return extract::to_json(x); }));
    const json report = extract::to_json(res.stats);
    write_file(extract_report_path(c), report.dump(2) + "\n");
    outputs = {citations_path(c), extract_report_path(c)};
    return report;
}

json run_crawl(const PipelineConfig& c, const RunOptions& o, std::vector<fs::path>& outputs) {
    const auto citations = load_citations(c);
    std::vector<std::string> urls;
    std::set<std::string> seen;
    for (const auto& ci : citations)
        if (seen.insert(ci.source_url).second) urls.push_back(ci.source_url);

    crawl::Crawler crawler(c.crawl, o.renderer);
    auto result = crawler.crawl_batch(urls);

    std::map<std::string, const crawl::CrawlOutcome*> by_url;
    for (const auto& out : result.outcomes) by_url[out.url] = &out;
    struct ModelRow {
        std::string provider;
        std::uint64_t total = 0, crawled = 0, phantom = 0, pdf = 0, file_format = 0;
    };
    std::map<std::string, ModelRow> models;
    std::uint64_t crawled = 0;
    for (const auto& ci : citations) {
        const auto* out = by_url.at(ci.source_url);
        auto& m = models[ci.model];
        m.provider = ci.provider;
        ++m.total;
        if (out->status == crawl::CrawlStatus::Success) {
            ++m.crawled;
            ++crawled;
        }
        m.phantom += out->phantom;
        m.pdf += is_pdf(*out);
        m.file_format += out->failure == crawl::FailureCategory::FileFormat;
    }
    json rows = json::array();
    for (const auto& [name, m] : models) {
        const double n = static_cast<double>(m.total);
        rows.push_back({{"model", name},
                        {"provider", m.provider},
                        {"total", m.total},
                        {"crawled", m.crawled},
                        {"phantom", m.phantom},
                        {"phantom_rate", static_cast<double>(m.phantom) / n},
                        {"pdf", m.pdf},
                        {"pdf_rate", static_cast<double>(m.pdf) / n},
                        {"file_format", m.file_format}});
    }
    json report{{"sources", crawl::to_json(result.report)},
                {"citations", {{"total", citations.size()}, {"crawled", crawled}, {"by_model", rows}}}};

    write_file(sources_path(c), to_jsonl(result.outcomes, [](const auto& x) { return crawl::to_json(x); }));
    write_file(c.out_dir / "crawl_report.json", report.dump(2) + "\n");
    outputs = {sources_path(c), c.out_dir / "crawl_report.json"};
    return report;
}

json run_judge(const PipelineConfig& c, const RunOptions& o, std::vector<fs::path>& outputs) {
    const auto citations = load_citations(c);
    judge::ContentMap content;
    for (auto& s : load_sources(c))
        if (s.status == crawl::CrawlStatus::Success) content.emplace(s.url, std::move(s.content));

    std::unique_ptr<judge::JudgeBackend> owned;
    judge::JudgeBackend* backend = o.backend;
    if (!backend) {
        owned = make_backend(c.judge);
        backend = owned.get();
    }
    judge::OrchestratorOptions oo;
    oo.classify = c.judge.classify;
    oo.concurrency = c.judge.concurrency;
    const auto run = judge::run_judging(citations, content, *backend, oo);

    write_file(judged_path(c), to_jsonl(run.citations, [](const auto& x) { return judge::to_json(x); }));
    std::string verdicts;
    for (const auto& [job, v] : run.verdicts) {
        json j{{"task", judge::to_string(job.task)}, {"key", job.key}, {"verdict", judge::to_json(v)}};
        verdicts += j.dump();
        verdicts += '\n';
    }
    write_file(c.out_dir / "verdicts.jsonl", verdicts);
    json report{{"backend", backend->name()},
                {"citations", citations.size()},
                {"judged", run.citations.size()},
                {"stats", judge::to_json(run.stats)}};
    write_file(c.out_dir / "judge_report.json", report.dump(2) + "\n");
    outputs = {judged_path(c), c.out_dir / "verdicts.jsonl", c.out_dir / "judge_report.json"};
    return report;
}

json run_filter(const PipelineConfig& c, const RunOptions&, std::vector<fs::path>& outputs) {
    const auto lines = read_jsonl(judged_path(c));
    std::vector<judge::JudgedCitation> judged;
    std::vector<filter::FilterItem> items;
    std::uint64_t from_judge = 0, from_heuristic = 0;
    for (const auto& j : lines) {
        judged.push_back(judge::judged_from_json(j));
        const auto& jc = judged.back();
        items.push_back({jc.citation.cited_sentence, jc.code_table, jc.unevaluable});
        if (jc.code_table) (jc.code_table_source == "judge" ? from_judge : from_heuristic)++;
    }
    auto res = filter::apply_filters(items, c.filter);
    res.report.code_table_from_judge = from_judge;
    res.report.code_table_from_heuristic = from_heuristic;
    std::string kept;
    for (auto k : res.kept) {
        kept += lines[k].dump();
        kept += '\n';
    }
    write_file(evaluable_path(c), kept);
    const json report = filter::to_json(res.report);
    write_file(c.out_dir / "filter_report.json", report.dump(2) + "\n");
    outputs = {evaluable_path(c), c.out_dir / "filter_report.json"};
    return report;
}

json run_score(const PipelineConfig& c, const RunOptions&, std::vector<fs::path>& outputs) {
    std::map<std::string, crawl::CrawlOutcome> sources;
    for (auto& s : load_sources(c)) sources.emplace(s.url, std::move(s));
    const auto matrices = c.matrices();
    std::vector<MasterRecord> rows;
    std::int64_t next_id = 1;
    for (const auto& j : read_jsonl(evaluable_path(c))) {
        const auto jc = judge::judged_from_json(j);
        if (!jc.qi || !jc.sp || !jc.sd || !jc.st || !jc.asf)
            fail(ErrorCode::MalformedPayload, "evaluable citation without all five labels");
        const auto it = sources.find(jc.citation.source_url);
        if (it == sources.end()) fail(ErrorCode::StageInputMissing, "no crawl record for " + jc.citation.source_url);
        MasterRecord r;
        r.cit_id = next_id++;
        r.query_id = jc.citation.query_id;
        r.site = jc.citation.site;
        r.category = jc.citation.category;
        r.model_short = jc.citation.model;
        r.provider = jc.citation.provider;
        r.cited_sentence = jc.citation.cited_sentence;
        r.url_id = it->second.url_id;
        r.source_url = jc.citation.source_url;
        r.clen = static_cast<std::int64_t>(it->second.content_length);
        r.crawl_yn = "Y";
        r.qi_label = "QI" + std::to_string(*jc.qi);
        r.sp_label = "SP" + std::to_string(*jc.sp);
        r.sd_label = "SD" + std::to_string(*jc.sd);
        r.st_label = "ST" + std::to_string(*jc.st);
        r.asf_label = "ASF" + std::to_string(*jc.asf);
        derive_fields(r, matrices);
        rows.push_back(std::move(r));
    }
    write_master(c.master_path(), rows);
    json report{{"rows", rows.size()}, {"format", c.master_format}, {"file", rel(c, c.master_path())}};
    write_file(c.out_dir / "score_report.json", report.dump(2) + "\n");
    outputs = {c.master_path(), c.out_dir / "score_report.json"};
    return report;
}

std::vector<metrics::ScoredCitation> load_scored(const PipelineConfig& c, const RunOptions& o, json& summary) {
    MasterReadOptions ro;
    ro.strict = o.strict;
    ro.matrices = c.matrices();
    const auto res = read_master(c.master_path(), ro);
    summary["rows_read"] = res.rows_read;
    summary["rows_valid"] = res.records.size();
    json v = json::array();
    for (const auto& x : res.violations) v.push_back(to_json(x));
    summary["violations"] = v;
    if (res.records.empty()) fail(ErrorCode::ValidationFailed, "no valid rows in " + c.master_path().string());
    return score_records(res.records, ro.matrices);
}

ReplayOptions replay_options(const PipelineConfig& c) {
    ReplayOptions r;
    r.thresholds = c.thresholds;
    r.density_edges = c.density_edges;
    r.weighted_variance = c.weighted_variance;
    return r;
}

json run_aggregate(const PipelineConfig& c, const RunOptions& o, std::vector<fs::path>& outputs) {
    json summary;
    const auto pool = load_scored(c, o, summary);
    auto rep = compute_aggregate(pool, replay_options(c));
    if (fs::exists(extract_report_path(c))) {
        const auto er = json::parse(read_file(extract_report_path(c)));
        if (er.contains("responses_without_citations"))
            rep.zero_citation_responses = er["responses_without_citations"].get<std::uint64_t>();
    }
    outputs = write_aggregate_bundle(reports_dir(c), rep);
    summary["citations"] = rep.pool.overall.n;
    summary["critvm"] = rep.pool.overall.critvm;
    summary["afr"] = rep.pool.overall.afr();
    summary["sfr"] = rep.pool.overall.sfr();
    summary["ffr"] = rep.pool.overall.ffr();
    return summary;
}

json run_stats(const PipelineConfig& c, const RunOptions& o, std::vector<fs::path>& outputs) {
    json summary;
    const auto pool = load_scored(c, o, summary);
    const auto rep = compute_stats(pool, replay_options(c));
    outputs = write_stats_bundle(reports_dir(c), rep);
    summary["dimensions"] = rep.dimensions.size();
    return summary;
}

json stage_settings(const PipelineConfig& c, Stage s, const RunOptions& o) {
    const auto all = to_json(c);
    json matrices{{"ipa", c.ipa_matrix.empty() ? "" : sha256_file(c.ipa_matrix)},
                  {"ss", c.ss_matrix.empty() ? "" : sha256_file(c.ss_matrix)}};
    switch (s) {
        case Stage::Extract: return all["extract"];
        case Stage::Crawl: return all["crawl"];
        case Stage::Judge: {
            auto j = all["judge"];
            if (o.backend) j["override"] = o.backend->name();
            if (!c.judge.mock_file.empty() && fs::exists(c.judge.mock_file))
                j["mock_file_sha256"] = sha256_file(c.judge.mock_file);
            return j;
        }
        case Stage::Filter: return all["filter"];
        case Stage::Score: return {{"output", all["output"]}, {"matrices", matrices}};
        case Stage::Aggregate:
        case Stage::Stats:
            return {{"thresholds", all["thresholds"]}, {"aggregate", all["aggregate"]}, {"matrices", matrices},
                    {"strict", o.strict}};
    }
    return {};
}

json hash_files(const PipelineConfig& c, const std::vector<fs::path>& files) {
    json out = json::object();
    for (const auto& f : files) out[rel(c, f)] = fs::exists(f) ? sha256_file(f) : std::string();
    return out;
}

bool up_to_date(const PipelineConfig& c, const json& entry, const json& settings, const json& inputs) {
    if (!entry.is_object() || entry.value("settings", json()) != settings || entry.value("inputs", json()) != inputs)
        return false;
    const auto outs = entry.value("outputs", json::object());
    if (outs.empty()) return false;
    for (const auto& [name, hash] : outs.items()) {
        const fs::path p = fs::path(name).is_absolute() ? fs::path(name) : c.out_dir / name;
        if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) return false;
    }
    return true;
}

}  // namespace

std::vector<fs::path> stage_inputs(const PipelineConfig& c, Stage s) {
    switch (s) {
        case Stage::Extract: return {c.responses};
        case Stage::Crawl: return {citations_path(c)};
        case Stage::Judge: return {citations_path(c), sources_path(c)};
        case Stage::Filter: return {judged_path(c)};
        case Stage::Score: return {evaluable_path(c), sources_path(c)};
        case Stage::Aggregate: {
            std::vector<fs::path> in{c.master_path()};
            if (fs::exists(extract_report_path(c))) in.push_back(extract_report_path(c));
            return in;
        }
        case Stage::Stats: return {c.master_path()};
    }
    return {};
}

json read_manifest(const fs::path& out_dir) {
    const auto p = out_dir / "manifest.json";
    if (!fs::exists(p)) return json::object();
    try {
        return json::parse(read_file(p));
    } catch (const json::exception&) {
        return json::object();  // a corrupt manifest only forfeits caching
    }
}

PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages, const RunOptions& options) {
    config.validate();
    if (stages.empty()) fail(ErrorCode::ConfigInvalid, "no stages requested");
    for (std::size_t k = 1; k < stages.size(); ++k)
        if (static_cast<int>(stages[k]) != static_cast<int>(stages[k - 1]) + 1)
            fail(ErrorCode::ConfigInvalid, "stages must be contiguous and in pipeline order");
    if (stages.front() == Stage::Extract && config.responses.empty())
        fail(ErrorCode::ConfigInvalid, "paths.responses is required for the extract stage");
    for (const auto& in : stage_inputs(config, stages.front()))
        if (!fs::exists(in))
            fail(ErrorCode::StageInputMissing, std::string(to_string(stages.front())) + " needs " + in.string());

    fs::create_directories(config.out_dir);
    PipelineResult result;
    result.manifest = config.out_dir / "manifest.json";
    json manifest = read_manifest(config.out_dir);
    manifest["run_id"] = config.run_id;
    if (!manifest.contains("stages") || !manifest["stages"].is_object()) manifest["stages"] = json::object();
    if (!manifest.contains("log") || !manifest["log"].is_array()) manifest["log"] = json::array();

    for (auto s : stages) {
        const std::string name(to_string(s));
        for (const auto& in : stage_inputs(config, s))
            if (!fs::exists(in)) fail(ErrorCode::StageInputMissing, name + " needs " + in.string());
        const auto settings = stage_settings(config, s, options);
        const auto inputs = hash_files(config, stage_inputs(config, s));
        StageOutcome outcome;
        outcome.stage = s;
        if (!options.force && up_to_date(config, manifest["stages"].value(name, json()), settings, inputs)) {
            outcome.skipped = true;
            outcome.summary = manifest["stages"][name].value("summary", json());
            manifest["log"].push_back({{"stage", name}, {"action", "skipped"}, {"at", utc_now()}});
        } else {
            std::vector<fs::path> outputs;
            switch (s) {
                case Stage::Extract: outcome.summary = run_extract(config, options, outputs); break;
                case Stage::Crawl: outcome.summary = run_crawl(config, options, outputs); break;
                case Stage::Judge: outcome.summary = run_judge(config, options, outputs); break;
                case Stage::Filter: outcome.summary = run_filter(config, options, outputs); break;
                case Stage::Score: outcome.summary = run_score(config, options, outputs); break;
                case Stage::Aggregate: outcome.summary = run_aggregate(config, options, outputs); break;
                case Stage::Stats: outcome.summary = run_stats(config, options, outputs); break;
            }
            outcome.outputs = outputs;
            manifest["stages"][name] = {{"settings", settings},
                                        {"inputs", inputs},
                                        {"outputs", hash_files(config, outputs)},
                                        {"summary", outcome.summary},
                                        {"completed_at", utc_now()}};
            manifest["log"].push_back({{"stage", name}, {"action", "ran"}, {"at", utc_now()}});
        }
        if (outcome.skipped)
            for (const auto& [f, _] : manifest["stages"][name]["outputs"].items()) outcome.outputs.push_back(config.out_dir / f);
        write_file(result.manifest, manifest.dump(2) + "\n");
        result.stages.push_back(std::move(outcome));
    }
    return result;
}

}  // namespace citeaudit::io
