#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace citeaudit::judge {

// Items x annotators; nullopt marks a missing annotation.
using AnnotationTable = std::vector<std::vector<std::optional<std::string>>>;

struct ReliabilityReport {
    std::size_t items = 0;
    std::size_t annotators = 0;
    std::size_t ties_excluded = 0;  // no strict majority label
    std::size_t used = 0;
    double raw_agreement = 0.0;         // judge vs majority, on used items
    double kappa_consensus = 0.0;       // Cohen's kappa, judge vs majority
    double mean_pairwise_kappa = 0.0;   // mean over annotators of kappa(judge, annotator)
    double balanced_accuracy = 0.0;     // mean per-class recall against the majority
    double alpha_annotators = 0.0;      // Krippendorff's alpha among annotators
};

// Statistics that are undefined on the data (e.g. a single gold class) are NaN.
// Throws InsufficientAnnotators below two annotators and InvalidArgument on
// shape mismatch.
ReliabilityReport validate_against_humans(std::span<const std::string> judge, const AnnotationTable& annotations);

// Strict majority label, or nullopt on a tie.
std::optional<std::string> majority_label(std::span<const std::optional<std::string>> row);

nlohmann::json to_json(const ReliabilityReport& r);

}  // namespace citeaudit::judge
