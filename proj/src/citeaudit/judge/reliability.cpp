#include "citeaudit/judge/reliability.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "citeaudit/common/error.hpp"
#include "citeaudit/stats/stats.hpp"

namespace citeaudit::judge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double kappa_or_nan(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty()) return kNaN;
    try {
        return stats::cohen_kappa(a, b);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateMarginals) return kNaN;
        throw;
    }
}

nlohmann::json num(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

std::optional<std::string> majority_label(std::span<const std::optional<std::string>> row) {
    std::map<std::string, int> counts;
    for (const auto& v : row)
        if (v) ++counts[*v];
    const std::string* best = nullptr;
    int best_n = 0;
    bool tie = false;
    for (const auto& [label, n] : counts) {
        if (n > best_n) {
            best = &label;
            best_n = n;
            tie = false;
        } else if (n == best_n) {
            tie = true;
        }
    }
    if (!best || tie) return std::nullopt;
    return *best;
}

ReliabilityReport validate_against_humans(std::span<const std::string> judge, const AnnotationTable& ann) {
    if (judge.size() != ann.size()) fail(ErrorCode::InvalidArgument, "judge labels and annotation rows differ in length");
    ReliabilityReport r;
    r.items = ann.size();
    r.annotators = ann.empty() ? 0 : ann.front().size();
    if (r.annotators < 2) fail(ErrorCode::InsufficientAnnotators, "need at least two annotators");
    for (const auto& row : ann)
        if (row.size() != r.annotators) fail(ErrorCode::InvalidArgument, "ragged annotation table");

    std::vector<std::string> j_used, gold;
    for (std::size_t i = 0; i < ann.size(); ++i) {
        auto m = majority_label(ann[i]);
        if (!m) {
            ++r.ties_excluded;
            continue;
        }
        j_used.push_back(judge[i]);
        gold.push_back(std::move(*m));
    }
    r.used = gold.size();

    std::size_t agree = 0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> recall;  // gold label -> (hits, total)
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto& cell = recall[gold[i]];
        ++cell.second;
        if (j_used[i] == gold[i]) {
            ++agree;
            ++cell.first;
        }
    }
    r.raw_agreement = gold.empty() ? kNaN : static_cast<double>(agree) / static_cast<double>(gold.size());
    double bacc = 0.0;
    for (const auto& [label, c] : recall) bacc += static_cast<double>(c.first) / static_cast<double>(c.second);
    r.balanced_accuracy = recall.empty() ? kNaN : bacc / static_cast<double>(recall.size());
    r.kappa_consensus = kappa_or_nan(j_used, gold);

    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t a = 0; a < r.annotators; ++a) {
        std::vector<std::string> x, y;
        for (std::size_t i = 0; i < ann.size(); ++i) {
            if (!ann[i][a]) continue;
            x.push_back(judge[i]);
            y.push_back(*ann[i][a]);
        }
        const double k = kappa_or_nan(x, y);
        if (!std::isnan(k)) {
            sum += k;
            ++defined;
        }
    }
    r.mean_pairwise_kappa = defined ? sum / static_cast<double>(defined) : kNaN;

    try {
        r.alpha_annotators = stats::krippendorff_alpha_nominal(ann);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoVariation) throw;
        r.alpha_annotators = kNaN;
    }
    return r;
}

nlohmann::json to_json(const ReliabilityReport& r) {
    return {{"items", r.items},
            {"annotators", r.annotators},
            {"ties_excluded", r.ties_excluded},
            {"used", r.used},
            {"raw_agreement", num(r.raw_agreement)},
            {"kappa_consensus", num(r.kappa_consensus)},
            {"mean_pairwise_kappa", num(r.mean_pairwise_kappa)},
            {"balanced_accuracy", num(r.balanced_accuracy)},
            {"alpha_annotators", num(r.alpha_annotators)}};
}

}  // namespace citeaudit::judge
