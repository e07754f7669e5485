#pragma once

// Recomputes every pool, response, model, provider and statistics report from
// a scored table without touching the network.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "citeaudit/io/master.hpp"
#include "citeaudit/metrics/metrics.hpp"
#include "citeaudit/stats/stats.hpp"

namespace citeaudit::io {

struct ReplayOptions {
    metrics::Thresholds thresholds;
    std::vector<metrics::ThresholdVariant> variants = metrics::default_threshold_variants();
    std::vector<std::size_t> density_edges{5, 10, 15, 20};
    bool weighted_variance = true;  // weight model means by citation count
    taxonomy::MatrixSet matrices;
};

struct AggregateReport {
    metrics::PoolReport pool;
    std::vector<metrics::GroupRow> by_category;
    std::vector<metrics::ResponseAggregate> responses;
    std::vector<metrics::VariantResult> sensitivity;
    std::optional<std::uint64_t> zero_citation_responses;  // known only when the run saw raw responses
};

struct DimensionSummary {
    std::string dimension;  // "ASF", "SS", "IPA"
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation
    double failure_rate = 0.0;
    std::optional<stats::KruskalWallisResult> by_model;     // nullopt when undefined (one group, all tied)
    std::optional<stats::KruskalWallisResult> by_category;
};

struct VarianceRow {
    std::string dimension;
    std::optional<stats::VarianceDecomposition> decomposition;  // nullopt with fewer than two providers
};

struct SourceTypeRow {
    std::string model;
    std::string provider;
    std::uint64_t n = 0;
    std::array<double, 6> shares{};  // ST1..ST6 share of the model's citations
    double sfr = 0.0;
};

struct StatsReport {
    std::vector<DimensionSummary> dimensions;
    std::vector<VarianceRow> variance;
    std::vector<SourceTypeRow> source_types;  // SFR ascending, ties by model name
    std::optional<double> official_share_vs_sfr_rho;
};

struct ReplayReport {
    std::uint64_t citations = 0;
    AggregateReport aggregate;
    StatsReport stats;
};

std::vector<metrics::ScoredCitation> score_records(std::span<const MasterRecord> records,
                                                   const taxonomy::MatrixSet& matrices = taxonomy::MatrixSet{});

AggregateReport compute_aggregate(std::span<const metrics::ScoredCitation> pool, const ReplayOptions& options = {});
StatsReport compute_stats(std::span<const metrics::ScoredCitation> pool, const ReplayOptions& options = {});

// Empty input raises InvalidArgument.
ReplayReport replay(std::span<const MasterRecord> records, const ReplayOptions& options = {});

nlohmann::ordered_json to_json(const AggregateReport& r);
nlohmann::ordered_json to_json(const StatsReport& r);
nlohmann::ordered_json to_json(const ReplayReport& r);

// Tab-separated tables, one per report section, keyed by file name.
std::vector<std::pair<std::string, std::string>> aggregate_tables(const AggregateReport& r);
std::vector<std::pair<std::string, std::string>> stats_tables(const StatsReport& r);

// report.json, responses.jsonl and tables/*.tsv. Output is a pure function of
// the report, so identical inputs give byte-identical files.
std::vector<std::filesystem::path> write_aggregate_bundle(const std::filesystem::path& dir, const AggregateReport& r);
std::vector<std::filesystem::path> write_stats_bundle(const std::filesystem::path& dir, const StatsReport& r);
std::vector<std::filesystem::path> write_replay_bundle(const std::filesystem::path& dir, const ReplayReport& r);

// Short human summary of the headline numbers.
std::string headline_summary(const ReplayReport& r);

}  // namespace citeaudit::io
