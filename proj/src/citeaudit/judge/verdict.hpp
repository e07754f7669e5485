#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "citeaudit/judge/prompts.hpp"

namespace citeaudit::judge {

struct JudgeVerdict {
    JudgeTask task = JudgeTask::QI;
    std::optional<int> label;  // 1-based ordinal; absent iff unevaluable
    std::string reasoning;
    std::string raw_payload;
    bool unevaluable = false;
    int attempts = 0;
    bool content_truncated = false;
    std::string last_error;  // set when unevaluable

    std::string label_code() const;  // "" when unevaluable
};

// Throws MalformedOutput (not a JSON object, missing or non-string field) or
// InvalidLabel (well-formed but outside the task's label set).
JudgeVerdict parse_verdict(std::string_view raw_payload, JudgeTask task);

nlohmann::json to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace citeaudit::judge
