#include "citeaudit/filter/evaluability.hpp"

#include "citeaudit/common/text.hpp"

namespace citeaudit::filter {

std::string_view to_string(FilterStage s) noexcept {
    switch (s) {
        case FilterStage::CodeOrTable: return "code_or_table";
        case FilterStage::JudgeUnevaluable: return "judge_unevaluable";
        case FilterStage::TooShort: return "too_short";
        case FilterStage::UnderFiveWords: return "under_five_words";
    }
    return "code_or_table";
}

std::size_t word_count(std::string_view t) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : t) {
        const bool space = text::is_space(c);
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

bool looks_like_code_or_table(std::string_view t) {
    if (t.find("```") != std::string_view::npos || t.find("~~~") != std::string_view::npos) return true;
    for (const auto& raw_line : text::split(t, '\n')) {
        const auto line = text::trim(raw_line);
        std::size_t pipes = 0;
        for (char c : line) pipes += c == '|';
        if (pipes >= 2 && (line.front() == '|' || line.back() == '|')) return true;
        if (pipes >= 3) return true;
        // markdown separator row such as ---|--- or :--|--:
        if (pipes >= 1 && line.find("---") != std::string_view::npos &&
            line.find_first_not_of("|-: ") == std::string_view::npos)
            return true;
    }
    // Inline code covering most of the text.
    std::size_t in_code = 0;
    bool open = false;
    for (char c : t) {
        if (c == '`') {
            open = !open;
            continue;
        }
        if (open) ++in_code;
    }
    return !t.empty() && in_code * 2 > t.size();
}

bool fails(FilterStage stage, const FilterItem& item, const FilterOptions& o) {
    switch (stage) {
        case FilterStage::CodeOrTable: return item.code_table;
        case FilterStage::JudgeUnevaluable: return item.unevaluable;
        case FilterStage::TooShort: return text::utf8_length(item.cited_sentence) < o.min_chars;
        case FilterStage::UnderFiveWords: return word_count(item.cited_sentence) < o.min_words;
    }
    return false;
}

nlohmann::json to_json(const AttritionReport& r) {
    nlohmann::json stages = nlohmann::json::array();
    std::uint64_t remaining = r.initial;
    for (auto s : kStageOrder) {
        const auto removed = r.removed[static_cast<std::size_t>(s)];
        remaining -= removed;
        stages.push_back({{"stage", to_string(s)}, {"removed", removed}, {"remaining", remaining}});
    }
    return {{"initial", r.initial},
            {"stages", stages},
            {"total_removed", r.initial - r.final_count},
            {"final", r.final_count},
            {"code_table_flag_source",
             {{"judge", r.code_table_from_judge}, {"heuristic", r.code_table_from_heuristic}}}};
}

FilterResult apply_filters(std::span<const FilterItem> items, const FilterOptions& options,
                           std::span<const FilterStage> order) {
    FilterResult res;
    res.report.initial = items.size();
    res.removed_at.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (auto stage : order) {
            if (fails(stage, items[i], options)) {
                res.removed_at[i] = stage;
                ++res.report.removed[static_cast<std::size_t>(stage)];
                break;
            }
        }
        if (!res.removed_at[i]) res.kept.push_back(i);
    }
    res.report.final_count = res.kept.size();
    return res;
}

}  // namespace citeaudit::filter
