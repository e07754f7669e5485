#pragma once

// Citation-, response- and pool-level failure metrics.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citeaudit/stats/stats.hpp"
#include "citeaudit/taxonomy/labels.hpp"
#include "citeaudit/taxonomy/score_matrix.hpp"

namespace citeaudit::metrics {

using taxonomy::DomainLabel;
using taxonomy::FidelityLabel;
using taxonomy::IntentLabel;
using taxonomy::PurposeLabel;
using taxonomy::TypeLabel;

// A dimension fails when its score is <= the threshold.
struct Thresholds {
    int ipa = 2;
    int asf = 2;
    int ss = 2;

    bool operator==(const Thresholds&) const = default;
};

void validate(const Thresholds& t);

struct CitationLabels {
    IntentLabel qi;
    PurposeLabel sp;
    DomainLabel sd;
    TypeLabel st;
    FidelityLabel asf;
};

struct CitationScores {
    int ipa = 0;
    int ss = 0;
    int asf = 0;
    bool fail_ipa = false;
    bool fail_ss = false;
    bool fail_asf = false;
    bool critvm = false;
};

CitationScores score_citation(const CitationLabels& labels, const Thresholds& t = {});
CitationScores score_citation(const CitationLabels& labels, const Thresholds& t,
                              const taxonomy::MatrixSet& matrices);

// Recomputes the failure flags for already-looked-up scores.
CitationScores apply_thresholds(int ipa, int ss, int asf, const Thresholds& t);

// One scored citation plus the metadata the pool analyses group by.
struct ScoredCitation {
    std::string query_id;
    std::string model;
    std::string provider;
    std::string category;
    DomainLabel sd = DomainLabel::SD10;
    TypeLabel st = TypeLabel::ST6;
    int ipa = 0;
    int ss = 0;
    int asf = 0;
};

struct ResponseAggregate {
    std::string query_id;
    std::string model;
    std::string provider;
    std::size_t n = 0;
    double r_ipa = 0.0;
    double r_ss = 0.0;
    double r_asf = 0.0;
    double afr = 0.0;
    double sfr = 0.0;
    double ffr = 0.0;
    bool r_afr = false;
    bool r_sfr = false;
    bool r_ffr = false;
    bool any_exposure = false;
};

// Throws EmptyResponse when scores is empty.
ResponseAggregate aggregate_response(std::span<const CitationScores> scores);

// Groups the pool by (query_id, model); output sorted by that key.
std::vector<ResponseAggregate> aggregate_responses(std::span<const ScoredCitation> pool, const Thresholds& t = {});

struct FailureCounts {
    std::uint64_t n = 0;
    std::uint64_t fail_ipa = 0;
    std::uint64_t fail_ss = 0;
    std::uint64_t fail_asf = 0;
    std::uint64_t critvm = 0;
    double sum_ipa = 0.0;
    double sum_ss = 0.0;
    double sum_asf = 0.0;

    double afr() const noexcept { return n ? double(fail_ipa) / double(n) : 0.0; }
    double sfr() const noexcept { return n ? double(fail_ss) / double(n) : 0.0; }
    double ffr() const noexcept { return n ? double(fail_asf) / double(n) : 0.0; }
    double critvm_rate() const noexcept { return n ? double(critvm) / double(n) : 0.0; }
    double mean_ipa() const noexcept { return n ? sum_ipa / double(n) : 0.0; }
    double mean_ss() const noexcept { return n ? sum_ss / double(n) : 0.0; }
    double mean_asf() const noexcept { return n ? sum_asf / double(n) : 0.0; }
    void add(const CitationScores& s);
};

struct ExposureCounts {
    std::uint64_t responses = 0;
    std::uint64_t citations = 0;
    std::uint64_t r_afr = 0;
    std::uint64_t r_sfr = 0;
    std::uint64_t r_ffr = 0;
    std::uint64_t any = 0;

    double mean_n() const noexcept { return responses ? double(citations) / double(responses) : 0.0; }
    double share(std::uint64_t k) const noexcept { return responses ? double(k) / double(responses) : 0.0; }
    void add(const ResponseAggregate& r);
};

// The seven exclusive regions of the three failure sets.
struct VennRegions {
    std::uint64_t ipa_only = 0;
    std::uint64_t ss_only = 0;
    std::uint64_t asf_only = 0;
    std::uint64_t ipa_ss = 0;
    std::uint64_t ipa_asf = 0;
    std::uint64_t ss_asf = 0;
    std::uint64_t all_three = 0;

    std::uint64_t union_count() const noexcept {
        return ipa_only + ss_only + asf_only + ipa_ss + ipa_asf + ss_asf + all_three;
    }
};

struct GroupRow {
    std::string key;
    std::string provider;  // filled for per-model rows
    FailureCounts citations;
    ExposureCounts responses;
};

struct DensityBin {
    std::string label;
    std::size_t lo = 0;
    std::optional<std::size_t> hi;  // inclusive; nullopt = open-ended
    FailureCounts citations;
    ExposureCounts responses;
};

struct YmylSplit {
    FailureCounts ymyl;
    FailureCounts non_ymyl;
    stats::TwoByTwo table;
    stats::FisherResult fisher;
};

struct PoolOptions {
    Thresholds thresholds;
    // Upper inclusive edges of the closed bins; the last bin is open-ended above the final edge.
    std::vector<std::size_t> density_edges{5, 10, 15, 20};
};

struct PoolReport {
    Thresholds thresholds;
    FailureCounts overall;
    double expected_critvm_rate = 0.0;
    VennRegions venn;
    YmylSplit ymyl;
    ExposureCounts exposure;
    std::vector<DensityBin> density;
    std::vector<GroupRow> by_model;
    std::vector<GroupRow> by_provider;
};

PoolReport pool_report(std::span<const ScoredCitation> pool, const PoolOptions& options = {});

struct ThresholdVariant {
    std::string name;
    Thresholds thresholds;
};

// baseline plus the six single-dimension +/-1 variants.
std::vector<ThresholdVariant> default_threshold_variants();

struct VariantResult {
    ThresholdVariant variant;
    std::uint64_t critvm = 0;
    double critvm_rate = 0.0;
    std::vector<std::string> model_ranking;     // ascending CritVM rate, ties by name
    std::vector<std::string> category_ranking;
    double tau_model = 0.0;     // NaN when a ranking is fully tied
    double tau_category = 0.0;
};

// The first variant whose thresholds equal (2,2,2) serves as the reference;
// throws InvalidArgument if none does.
std::vector<VariantResult> threshold_sensitivity(std::span<const ScoredCitation> pool,
                                                 std::span<const ThresholdVariant> variants);

// Dense 1..k bin assignment used by the density analysis.
std::size_t density_bin_index(std::size_t n, std::span<const std::size_t> edges) noexcept;
std::string density_bin_label(std::size_t index, std::span<const std::size_t> edges);

}  // namespace citeaudit::metrics
