#pragma once

// Stage sequencing with a content-hash manifest.
//
// Stage files, all under the configured out_dir:
//   extract    citations.jsonl, extract_report.json
//   crawl      sources.jsonl, crawl_report.json
//   judge      judged.jsonl, verdicts.jsonl, judge_report.json
//   filter     evaluable.jsonl, filter_report.json
//   score      master.<format>, score_report.json
//   aggregate  reports/aggregate.json, reports/responses.jsonl, reports/tables/*
//   stats      reports/stats.json, reports/tables/*
//
// A stage is skipped when manifest.json records the same stage settings, the
// same input hashes and output files that still hash to the recorded values.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "citeaudit/io/config.hpp"

namespace citeaudit::io {

enum class Stage { Extract, Crawl, Judge, Filter, Score, Aggregate, Stats };

inline constexpr std::array<Stage, 7> kAllStages = {Stage::Extract, Stage::Crawl,     Stage::Judge, Stage::Filter,
                                                    Stage::Score,   Stage::Aggregate, Stage::Stats};

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;

// Stages between `from` and `to` inclusive, in pipeline order.
std::vector<Stage> stage_range(Stage from, Stage to);

struct RunOptions {
    bool strict = false;   // validation problems become ValidationFailed
    bool force = false;    // ignore the manifest and rerun every stage
    judge::JudgeBackend* backend = nullptr;  // overrides the configured backend
    crawl::PageRenderer* renderer = nullptr;
};

struct StageOutcome {
    Stage stage = Stage::Extract;
    bool skipped = false;
    std::vector<std::filesystem::path> outputs;
    nlohmann::json summary;
};

struct PipelineResult {
    std::vector<StageOutcome> stages;
    std::filesystem::path manifest;
};

// `stages` must be non-empty and contiguous in pipeline order (ConfigInvalid).
// The first stage's inputs must exist (StageInputMissing).
PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages,
                            const RunOptions& options = {});

// Input files each stage reads, given the configuration.
std::vector<std::filesystem::path> stage_inputs(const PipelineConfig& config, Stage s);

nlohmann::json read_manifest(const std::filesystem::path& out_dir);

}  // namespace citeaudit::io
