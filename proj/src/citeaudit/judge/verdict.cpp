#include "citeaudit/judge/verdict.hpp"

#include "citeaudit/common/error.hpp"

namespace citeaudit::judge {

std::string JudgeVerdict::label_code() const { return label ? judge::label_code(task, *label) : std::string(); }

JudgeVerdict parse_verdict(std::string_view raw, JudgeTask task) {
    auto j = nlohmann::json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::MalformedOutput, "payload is not a JSON object");
    const std::string rf(reasoning_field(task)), lf(label_field(task));
    auto r = j.find(rf);
    auto l = j.find(lf);
    if (r == j.end() || !r->is_string()) fail(ErrorCode::MalformedOutput, "missing string field " + rf);
    if (l == j.end() || !l->is_string()) fail(ErrorCode::MalformedOutput, "missing string field " + lf);

    const auto code = l->get<std::string>();
    const auto prefix = to_string(task);
    std::optional<int> ordinal;
    if (code.size() > prefix.size() && code.compare(0, prefix.size(), prefix) == 0) {
        const auto digits = code.substr(prefix.size());
        if (digits.size() <= 2 && digits.front() != '0' &&
            digits.find_first_not_of("0123456789") == std::string::npos) {
            const int v = std::stoi(digits);
            if (v >= 1 && v <= static_cast<int>(label_count(task))) ordinal = v;
        }
    }
    if (!ordinal) fail(ErrorCode::InvalidLabel, "\"" + code + "\" is not a " + std::string(prefix) + " label");

    JudgeVerdict v;
    v.task = task;
    v.label = ordinal;
    v.reasoning = r->get<std::string>();
    v.raw_payload = std::string(raw);
    return v;
}

nlohmann::json to_json(const JudgeVerdict& v) {
    nlohmann::json j{{"task", to_string(v.task)},
                     {"label", v.label ? nlohmann::json(v.label_code()) : nlohmann::json(nullptr)},
                     {"reasoning", v.reasoning},
                     {"raw_payload", v.raw_payload},
                     {"unevaluable", v.unevaluable},
                     {"attempts", v.attempts}};
    if (v.content_truncated) j["content_truncated"] = true;
    if (!v.last_error.empty()) j["error"] = v.last_error;
    return j;
}

JudgeVerdict verdict_from_json(const nlohmann::json& j) {
    try {
        JudgeVerdict v;
        const auto task = parse_task(j.at("task").get<std::string>());
        if (!task) fail(ErrorCode::SchemaMismatch, "unknown judge task");
        v.task = *task;
        v.unevaluable = j.at("unevaluable").get<bool>();
        v.attempts = j.at("attempts").get<int>();
        v.reasoning = j.value("reasoning", "");
        v.raw_payload = j.value("raw_payload", "");
        v.content_truncated = j.value("content_truncated", false);
        v.last_error = j.value("error", "");
        if (!v.unevaluable) {
            const auto code = j.at("label").get<std::string>();
            const auto prefix = to_string(v.task);
            if (code.compare(0, prefix.size(), prefix) != 0) fail(ErrorCode::SchemaMismatch, "label/task mismatch");
            v.label = std::stoi(code.substr(prefix.size()));
            if (*v.label < 1 || *v.label > static_cast<int>(label_count(v.task)))
                fail(ErrorCode::SchemaMismatch, "label out of range");
        } else if (!j.at("label").is_null()) {
            fail(ErrorCode::SchemaMismatch, "unevaluable verdict carries a label");
        }
        return v;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaMismatch, std::string("verdict record: ") + e.what());
    } catch (const std::logic_error& e) {
        fail(ErrorCode::SchemaMismatch, std::string("verdict record: ") + e.what());
    }
}

}  // namespace citeaudit::judge
