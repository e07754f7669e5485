#pragma once

#include "citeaudit/judge/backend.hpp"
#include "citeaudit/judge/prompts.hpp"
#include "citeaudit/judge/verdict.hpp"

namespace citeaudit::judge {

struct ClassifyOptions {
    int retry_budget = 3;  // total attempts
    std::size_t content_cap = kDefaultContentCap;
};

// Retries MalformedOutput and InvalidLabel up to the budget, then returns an
// unevaluable verdict. BackendUnavailable and MissingInput propagate.
JudgeVerdict classify(JudgeTask task, const PromptInputs& inputs, JudgeBackend& backend,
                      const ClassifyOptions& options = {});

}  // namespace citeaudit::judge
