#pragma once

// Staged evaluability filters applied between judging and scoring.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace citeaudit::filter {

enum class FilterStage { CodeOrTable = 0, JudgeUnevaluable, TooShort, UnderFiveWords };

inline constexpr std::array<FilterStage, 4> kStageOrder = {FilterStage::CodeOrTable, FilterStage::JudgeUnevaluable,
                                                           FilterStage::TooShort, FilterStage::UnderFiveWords};

std::string_view to_string(FilterStage s) noexcept;

// Maximal runs of non-whitespace.
std::size_t word_count(std::string_view text) noexcept;

// Offline stand-in for the judge's code/table flag: fenced blocks, markdown
// table rows or separators, and text dominated by inline code.
bool looks_like_code_or_table(std::string_view text);

struct FilterItem {
    std::string cited_sentence;
    bool code_table = false;
    bool unevaluable = false;
};

struct FilterOptions {
    std::size_t min_chars = 20;  // Unicode scalar values, raw text
    std::size_t min_words = 5;
};

bool fails(FilterStage stage, const FilterItem& item, const FilterOptions& options);

struct AttritionReport {
    std::uint64_t initial = 0;
    std::array<std::uint64_t, 4> removed{};  // indexed by FilterStage
    std::uint64_t final_count = 0;
    std::uint64_t code_table_from_judge = 0;
    std::uint64_t code_table_from_heuristic = 0;
};

nlohmann::json to_json(const AttritionReport& r);

struct FilterResult {
    std::vector<std::size_t> kept;                   // indices into the input, in input order
    std::vector<std::optional<FilterStage>> removed_at;  // per input item
    AttritionReport report;
};

// Each item is charged to the first stage (in `order`) that removes it.
FilterResult apply_filters(std::span<const FilterItem> items, const FilterOptions& options = {},
                           std::span<const FilterStage> order = kStageOrder);

}  // namespace citeaudit::filter
