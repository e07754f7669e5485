#include "citeaudit/judge/orchestrator.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "citeaudit/common/error.hpp"
#include "citeaudit/filter/evaluability.hpp"

namespace citeaudit::judge {

namespace {

std::string query_key(const extract::NormalizedCitation& c) { return c.query_id.empty() ? c.query : c.query_id; }

nlohmann::json label_json(JudgeTask t, const std::optional<int>& v) {
    return v ? nlohmann::json(label_code(t, *v)) : nlohmann::json(nullptr);
}

std::optional<int> label_from(const nlohmann::json& j, JudgeTask t) {
    if (j.is_null()) return std::nullopt;
    const auto code = j.get<std::string>();
    const auto prefix = to_string(t);
    if (code.compare(0, prefix.size(), prefix) != 0) fail(ErrorCode::SchemaMismatch, "bad label " + code);
    const int v = std::stoi(code.substr(prefix.size()));
    if (v < 1 || v > static_cast<int>(label_count(t))) fail(ErrorCode::SchemaMismatch, "bad label " + code);
    return v;
}

}  // namespace

JudgePlan plan_jobs(std::span<const extract::NormalizedCitation> citations, const ContentMap& content) {
    JudgePlan plan;
    std::unordered_set<std::string> seen_q, seen_s;
    std::vector<JudgeJob> qjobs, sjobs, pjobs;
    for (std::size_t i = 0; i < citations.size(); ++i) {
        const auto& c = citations[i];
        auto it = content.find(c.source_url);
        if (it == content.end()) {
            ++plan.skipped_uncrawled;
            continue;
        }
        plan.judged.push_back(i);
        if (seen_q.insert(query_key(c)).second) {
            PromptInputs in;
            in.query = c.query;
            qjobs.push_back({JudgeTask::QI, query_key(c), std::move(in)});
        }
        if (seen_s.insert(c.source_url).second) {
            for (auto t : {JudgeTask::SP, JudgeTask::SD, JudgeTask::ST}) {
                PromptInputs in;
                in.source_url = c.source_url;
                in.source_content = it->second;
                sjobs.push_back({t, c.source_url, std::move(in)});
            }
        }
        PromptInputs in;
        in.cited_sentence = c.cited_sentence;
        in.source_content = it->second;
        pjobs.push_back({JudgeTask::ASF, std::to_string(i), std::move(in)});
    }
    plan.queries = qjobs.size();
    plan.sources = seen_s.size();
    plan.pairs = pjobs.size();
    for (auto* v : {&qjobs, &sjobs, &pjobs})
        for (auto& j : *v) plan.jobs.push_back(std::move(j));
    return plan;
}

nlohmann::json to_json(const JudgedCitation& c) {
    auto j = extract::to_json(c.citation);
    j["qi"] = label_json(JudgeTask::QI, c.qi);
    j["sp"] = label_json(JudgeTask::SP, c.sp);
    j["sd"] = label_json(JudgeTask::SD, c.sd);
    j["st"] = label_json(JudgeTask::ST, c.st);
    j["asf"] = label_json(JudgeTask::ASF, c.asf);
    j["unevaluable"] = c.unevaluable;
    j["code_table"] = c.code_table;
    j["code_table_source"] = c.code_table_source;
    return j;
}

JudgedCitation judged_from_json(const nlohmann::json& j) {
    try {
        JudgedCitation c;
        c.citation = extract::citation_from_json(j);
        c.qi = label_from(j.at("qi"), JudgeTask::QI);
        c.sp = label_from(j.at("sp"), JudgeTask::SP);
        c.sd = label_from(j.at("sd"), JudgeTask::SD);
        c.st = label_from(j.at("st"), JudgeTask::ST);
        c.asf = label_from(j.at("asf"), JudgeTask::ASF);
        c.unevaluable = j.at("unevaluable").get<bool>();
        c.code_table = j.value("code_table", false);
        c.code_table_source = j.value("code_table_source", "");
        const bool complete = c.qi && c.sp && c.sd && c.st && c.asf;
        if (complete == c.unevaluable) fail(ErrorCode::SchemaMismatch, "unevaluable flag disagrees with labels");
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaMismatch, std::string("judged citation: ") + e.what());
    } catch (const std::logic_error& e) {
        fail(ErrorCode::SchemaMismatch, std::string("judged citation: ") + e.what());
    }
}

nlohmann::json to_json(const JudgeRunStats& s) {
    nlohmann::json unev = nlohmann::json::object();
    for (auto t : kAllTasks) unev[std::string(to_string(t))] = s.unevaluable[static_cast<std::size_t>(t)];
    return {{"tasks", s.tasks},
            {"attempts", s.attempts},
            {"truncated_inputs", s.truncated_inputs},
            {"unevaluable", unev},
            {"skipped_uncrawled", s.skipped_uncrawled}};
}

JudgeRun run_judging(std::span<const extract::NormalizedCitation> citations, const ContentMap& content,
                     JudgeBackend& backend, const OrchestratorOptions& options) {
    auto plan = plan_jobs(citations, content);
    std::vector<JudgeVerdict> results(plan.jobs.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= plan.jobs.size() || stop) return;
            try {
                results[i] = classify(plan.jobs[i].task, plan.jobs[i].inputs, backend, options.classify);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                stop = true;
                return;
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(options.concurrency, plan.jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    JudgeRun run;
    run.stats.skipped_uncrawled = plan.skipped_uncrawled;
    std::unordered_map<std::string, std::size_t> qi_at;
    std::unordered_map<std::string, std::array<std::size_t, 3>> src_at;
    std::unordered_map<std::string, std::size_t> asf_at;
    for (std::size_t i = 0; i < plan.jobs.size(); ++i) {
        const auto& job = plan.jobs[i];
        const auto& v = results[i];
        ++run.stats.tasks;
        run.stats.attempts += static_cast<std::uint64_t>(v.attempts);
        if (v.content_truncated) ++run.stats.truncated_inputs;
        if (v.unevaluable) ++run.stats.unevaluable[static_cast<std::size_t>(job.task)];
        switch (job.task) {
            case JudgeTask::QI: qi_at[job.key] = i; break;
            case JudgeTask::SP: src_at[job.key][0] = i; break;
            case JudgeTask::SD: src_at[job.key][1] = i; break;
            case JudgeTask::ST: src_at[job.key][2] = i; break;
            case JudgeTask::ASF: asf_at[job.key] = i; break;
        }
    }

    for (auto idx : plan.judged) {
        const auto& c = citations[idx];
        JudgedCitation out;
        out.citation = c;
        out.qi = results[qi_at.at(query_key(c))].label;
        const auto& s = src_at.at(c.source_url);
        out.sp = results[s[0]].label;
        out.sd = results[s[1]].label;
        out.st = results[s[2]].label;
        out.asf = results[asf_at.at(std::to_string(idx))].label;
        out.unevaluable = !(out.qi && out.sp && out.sd && out.st && out.asf);
        out.code_table = filter::looks_like_code_or_table(c.cited_sentence);
        out.code_table_source = "heuristic";
        run.citations.push_back(std::move(out));
    }
    run.verdicts.reserve(plan.jobs.size());
    for (std::size_t i = 0; i < plan.jobs.size(); ++i)
        run.verdicts.emplace_back(std::move(plan.jobs[i]), std::move(results[i]));
    return run;
}

}  // namespace citeaudit::judge
