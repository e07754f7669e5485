#pragma once

// Fans citations out into judge tasks: three per unique source (SP, SD, ST),
// one per unique query (QI), one per citation (ASF).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "citeaudit/extract/extractor.hpp"
#include "citeaudit/judge/classify.hpp"

namespace citeaudit::judge {

// Crawled main text keyed by canonical source URL. Citations whose URL is
// absent were not crawled successfully and are not judged.
using ContentMap = std::unordered_map<std::string, std::string>;

struct JudgeJob {
    JudgeTask task;
    std::string key;  // query_id, source_url, or citation index
    PromptInputs inputs;
};

struct JudgePlan {
    std::vector<JudgeJob> jobs;
    std::vector<std::size_t> judged;  // indices of citations with crawled content
    std::size_t queries = 0;
    std::size_t sources = 0;
    std::size_t pairs = 0;
    std::size_t skipped_uncrawled = 0;
};

JudgePlan plan_jobs(std::span<const extract::NormalizedCitation> citations, const ContentMap& content);

struct JudgedCitation {
    extract::NormalizedCitation citation;
    std::optional<int> qi, sp, sd, st, asf;
    bool unevaluable = false;  // any of the five verdicts
    bool code_table = false;
    std::string code_table_source;  // "heuristic" or "judge"
};

nlohmann::json to_json(const JudgedCitation& c);
JudgedCitation judged_from_json(const nlohmann::json& j);

struct JudgeRunStats {
    std::uint64_t tasks = 0;
    std::uint64_t attempts = 0;
    std::uint64_t truncated_inputs = 0;
    std::array<std::uint64_t, 5> unevaluable{};  // indexed by JudgeTask
    std::uint64_t skipped_uncrawled = 0;
};

nlohmann::json to_json(const JudgeRunStats& s);

struct JudgeRun {
    std::vector<JudgedCitation> citations;
    std::vector<std::pair<JudgeJob, JudgeVerdict>> verdicts;  // plan order
    JudgeRunStats stats;
};

struct OrchestratorOptions {
    ClassifyOptions classify;
    unsigned concurrency = 8;
};

// Jobs run on a worker pool; output order follows the plan, so a
// deterministic backend gives identical runs. The first BackendUnavailable
// stops the pool and is rethrown.
JudgeRun run_judging(std::span<const extract::NormalizedCitation> citations, const ContentMap& content,
                     JudgeBackend& backend, const OrchestratorOptions& options = {});

}  // namespace citeaudit::judge
