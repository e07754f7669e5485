#pragma once

// Reliability, correlation and nonparametric statistics used for judge
// validation, matrix validation and the pool-level analyses.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace citeaudit::stats {

// ---- agreement ----------------------------------------------------------

// Unweighted Cohen's kappa. Throws DegenerateMarginals when p_e == 1.
double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);

// Square count grid over a shared label set; rows = rater A, cols = rater B.
struct ConfusionTable {
    std::vector<std::string> labels;
    std::vector<std::uint64_t> counts;  // row-major, labels.size()^2

    static ConfusionTable from_pairs(std::span<const std::string> a, std::span<const std::string> b);
    std::uint64_t total() const noexcept;
    std::uint64_t at(std::size_t row, std::size_t col) const { return counts.at(row * labels.size() + col); }
};

double cohen_kappa(const ConfusionTable& table);

// Units x raters; nullopt marks a missing rating.
using NominalGrid = std::vector<std::vector<std::optional<std::string>>>;

// Krippendorff's alpha, nominal metric, pairable-values convention for
// missing cells. Throws NoVariation when expected disagreement is zero.
double krippendorff_alpha_nominal(const NominalGrid& grid);

// Targets x raters numeric grid (complete).
class RatingsGrid {
public:
    RatingsGrid(std::size_t targets, std::size_t raters, std::vector<double> values);
    std::size_t targets() const noexcept { return targets_; }
    std::size_t raters() const noexcept { return raters_; }
    double at(std::size_t t, std::size_t r) const { return values_[t * raters_ + r]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t targets_;
    std::size_t raters_;
    std::vector<double> values_;
};

struct IccResult {
    double icc = 0.0;      // ICC(2,k), absolute agreement of average measures
    double icc_single = 0.0;  // ICC(2,1)
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ms_rows = 0.0;
    double ms_cols = 0.0;
    double ms_error = 0.0;
    std::size_t targets = 0;
    std::size_t raters = 0;
};

// Two-way ANOVA mean squares; CI from F-distribution bounds.
IccResult icc_2k(const RatingsGrid& grid, double confidence = 0.95);

// ---- correlation --------------------------------------------------------

double pearson_r(std::span<const double> x, std::span<const double> y);
// Lin's concordance correlation (population moments).
double concordance_ccc(std::span<const double> x, std::span<const double> y);
double mean_absolute_deviation(std::span<const double> x, std::span<const double> y);

// 1-based ranks; ties receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

double spearman_rho(std::span<const double> x, std::span<const double> y);

// Kendall tau-b (tie corrected), O(n log n). NaN when either side is fully tied.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// ---- tests --------------------------------------------------------------

struct KruskalWallisResult {
    double h = 0.0;
    double p_value = 1.0;
    double eta_squared = 0.0;  // (H - k + 1) / (N - k)
    std::size_t n = 0;
    std::size_t groups = 0;
};

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// [[a, b], [c, d]]; odds ratio = a*d / (b*c).
struct TwoByTwo {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    std::uint64_t d = 0;
};

struct FisherResult {
    double odds_ratio = 0.0;
    double p_value = 1.0;
    bool exact = true;                 // false: normal approximation on log OR
    bool continuity_corrected = false; // a zero cell forced the 0.5 correction
};

// Exact two-sided p for totals up to exact_limit, Woolf normal approximation above.
FisherResult fisher_or(const TwoByTwo& table, std::uint64_t exact_limit = 10000);

struct GroupCell {
    std::string group;     // provider
    std::string member;    // model
    double n = 0.0;        // observations (citations)
    double mean = 0.0;
};

struct VarianceDecomposition {
    double between_ss = 0.0;
    double within_ss = 0.0;
    double between_pct = 0.0;
    double within_pct = 0.0;
};

// between = sum_g n_g (mu_g - mu)^2, within = sum_g sum_m n_m (mu_m - mu_g)^2.
// With weighted == false every member counts once (n_m := 1).
VarianceDecomposition variance_decomposition(std::span<const GroupCell> cells, bool weighted = true);

}  // namespace citeaudit::stats
