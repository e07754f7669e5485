#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace citeaudit::judge {

enum class JudgeTask { QI, SP, SD, ST, ASF };

inline constexpr JudgeTask kAllTasks[] = {JudgeTask::QI, JudgeTask::SP, JudgeTask::SD, JudgeTask::ST,
                                          JudgeTask::ASF};

std::string_view to_string(JudgeTask t) noexcept;
std::optional<JudgeTask> parse_task(std::string_view s) noexcept;

// JSON keys of the structured verdict, e.g. intent_reasoning / intent.
std::string_view reasoning_field(JudgeTask t) noexcept;
std::string_view label_field(JudgeTask t) noexcept;
std::size_t label_count(JudgeTask t) noexcept;
std::string label_code(JudgeTask t, int ordinal);

struct PromptInputs {
    std::optional<std::string> query;
    std::optional<std::string> source_url;
    std::optional<std::string> source_content;
    std::optional<std::string> cited_sentence;
};

struct Prompt {
    std::string system;
    std::string user;
    bool content_truncated = false;
};

inline constexpr std::size_t kDefaultContentCap = 50000;

std::string_view system_prompt(JudgeTask t) noexcept;
std::string_view user_template(JudgeTask t) noexcept;

// Throws MissingInput when a field the task consumes is absent. Placeholders
// are substituted in one pass, so braces inside inputs are left alone.
// source_content longer than content_cap code points keeps only its head.
Prompt build_prompt(JudgeTask t, const PromptInputs& in, std::size_t content_cap = kDefaultContentCap);

// Strict json_schema attachment for structured output.
nlohmann::json output_schema(JudgeTask t);

}  // namespace citeaudit::judge
