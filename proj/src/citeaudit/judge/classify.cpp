#include "citeaudit/judge/classify.hpp"

#include "citeaudit/common/error.hpp"

namespace citeaudit::judge {

JudgeVerdict classify(JudgeTask task, const PromptInputs& inputs, JudgeBackend& backend,
                      const ClassifyOptions& options) {
    if (options.retry_budget < 1) fail(ErrorCode::ConfigInvalid, "retry budget must be at least 1");
    const auto prompt = build_prompt(task, inputs, options.content_cap);
    BackendRequest req{task, prompt.system, prompt.user, output_schema(task), 1};

    JudgeVerdict out;
    out.task = task;
    for (int attempt = 1; attempt <= options.retry_budget; ++attempt) {
        req.attempt = attempt;
        auto raw = backend.complete(req);
        try {
            auto v = parse_verdict(raw, task);
            v.attempts = attempt;
            v.content_truncated = prompt.content_truncated;
            return v;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MalformedOutput && e.code() != ErrorCode::InvalidLabel) throw;
            out.raw_payload = std::move(raw);
            out.last_error = e.what();
        }
    }
    out.unevaluable = true;
    out.attempts = options.retry_budget;
    out.content_truncated = prompt.content_truncated;
    return out;
}

}  // namespace citeaudit::judge
