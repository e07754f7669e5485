#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "citeaudit/common/error.hpp"
#include "citeaudit/judge/backend.hpp"
#include "citeaudit/judge/classify.hpp"
#include "citeaudit/judge/orchestrator.hpp"
#include "citeaudit/judge/reliability.hpp"

using namespace citeaudit;
using namespace citeaudit::judge;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(CITEAUDIT_TEST_DATA) + "/prompts/" + name, std::ios::binary);
    EXPECT_TRUE(in) << name;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fixture_stem(JudgeTask t) {
    switch (t) {
        case JudgeTask::QI: return "qi";
        case JudgeTask::SP: return "sp";
        case JudgeTask::SD: return "sd";
        case JudgeTask::ST: return "st";
        case JudgeTask::ASF: return "asf";
    }
    return "";
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

PromptInputs full_inputs() {
    PromptInputs in;
    in.query = "How much Vitamin A is too much per day?";
    in.source_url = "https://ods.od.nih.gov/factsheets/VitaminA-Consumer/";
    in.source_content = "Vitamin A is a fat-soluble vitamin.";
    in.cited_sentence = "Adults should not exceed 3,000 mcg per day.";
    return in;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

std::string payload(JudgeTask t, const std::string& label) {
    return nlohmann::json{{std::string(reasoning_field(t)), "because"}, {std::string(label_field(t)), label}}.dump();
}

}  // namespace

TEST(Prompts, SystemPromptsMatchSnapshots) {
    for (auto t : kAllTasks) {
        const auto p = build_prompt(t, full_inputs());
        EXPECT_EQ(p.system, slurp(fixture_stem(t) + "_system.txt")) << to_string(t);
    }
}

TEST(Prompts, UserPromptsFollowTemplates) {
    const auto in = full_inputs();
    for (auto t : kAllTasks) {
        auto expected = slurp(fixture_stem(t) + "_user_template.txt");
        expected = replace_all(expected, "{query}", *in.query);
        expected = replace_all(expected, "{source_url}", *in.source_url);
        expected = replace_all(expected, "{source_content}", *in.source_content);
        expected = replace_all(expected, "{cited_sentence}", *in.cited_sentence);
        EXPECT_EQ(build_prompt(t, in).user, expected) << to_string(t);
    }
}

TEST(Prompts, Examples) {
    const auto qi = build_prompt(JudgeTask::QI, full_inputs());
    EXPECT_EQ(qi.system.rfind("You are a query intent classifier.", 0), 0u);
    EXPECT_EQ(qi.user, "<query>\nHow much Vitamin A is too much per day?\n</query>");

    const auto asf = build_prompt(JudgeTask::ASF, full_inputs());
    EXPECT_EQ(asf.system.rfind("You are an answer-source fidelity evaluator.", 0), 0u);
    const auto cs = asf.user.find("<cited_sentence>");
    const auto sc = asf.user.find("<source_content>");
    ASSERT_NE(cs, std::string::npos);
    ASSERT_NE(sc, std::string::npos);
    EXPECT_LT(cs, sc);

    EXPECT_NE(build_prompt(JudgeTask::SD, full_inputs()).system.find("SD1 Medical/Health."), std::string::npos);
}

TEST(Prompts, MissingInput) {
    PromptInputs in;
    in.source_url = "https://a.example/";
    EXPECT_EQ(code_of([&] { build_prompt(JudgeTask::SP, in); }), ErrorCode::MissingInput);
    EXPECT_EQ(code_of([&] { build_prompt(JudgeTask::QI, in); }), ErrorCode::MissingInput);
    in.source_content = "text";
    EXPECT_EQ(code_of([&] { build_prompt(JudgeTask::ASF, in); }), ErrorCode::MissingInput);
    EXPECT_NO_THROW(build_prompt(JudgeTask::ST, in));
}

TEST(Prompts, BracesInInputsAreNotExpanded) {
    PromptInputs in;
    in.source_url = "https://x.example/{source_content}";
    in.source_content = "{source_url}";
    EXPECT_EQ(build_prompt(JudgeTask::SD, in).user,
              "<source_url>\nhttps://x.example/{source_content}\n</source_url>\n\n<source_content>\n{source_url}\n"
              "</source_content>");
}

TEST(Prompts, ContentTruncatedHeadOnly) {
    PromptInputs in;
    in.source_url = "https://x.example/";
    in.source_content = std::string(60000, 'a') + "TAIL";
    const auto p = build_prompt(JudgeTask::SP, in);
    EXPECT_TRUE(p.content_truncated);
    EXPECT_EQ(p.user.find("TAIL"), std::string::npos);
    EXPECT_NE(p.user.find(std::string(50000, 'a') + "\n</source_content>"), std::string::npos);
    EXPECT_FALSE(build_prompt(JudgeTask::SP, full_inputs()).content_truncated);
}

TEST(Prompts, OutputSchemaEnumeratesLabels) {
    const auto s = output_schema(JudgeTask::SD);
    EXPECT_TRUE(s["strict"].get<bool>());
    const auto& e = s["schema"]["properties"]["domain"]["enum"];
    ASSERT_EQ(e.size(), 10u);
    EXPECT_EQ(e[9], "SD10");
    EXPECT_EQ(s["schema"]["required"].size(), 2u);
    EXPECT_TRUE(output_schema(JudgeTask::ST)["schema"]["properties"].contains("source_type"));
}

TEST(ParseVerdict, Labels) {
    auto v = parse_verdict(payload(JudgeTask::QI, "QI2"), JudgeTask::QI);
    EXPECT_EQ(v.label, 2);
    EXPECT_EQ(v.label_code(), "QI2");
    EXPECT_EQ(v.reasoning, "because");
    EXPECT_EQ(parse_verdict(payload(JudgeTask::ASF, "ASF5"), JudgeTask::ASF).label, 5);
    EXPECT_EQ(parse_verdict(payload(JudgeTask::SD, "SD10"), JudgeTask::SD).label_code(), "SD10");
}

TEST(ParseVerdict, Errors) {
    EXPECT_EQ(code_of([] { parse_verdict(payload(JudgeTask::QI, "QI7"), JudgeTask::QI); }), ErrorCode::InvalidLabel);
    EXPECT_EQ(code_of([] { parse_verdict(payload(JudgeTask::QI, "SP1"), JudgeTask::QI); }), ErrorCode::InvalidLabel);
    EXPECT_EQ(code_of([] { parse_verdict(payload(JudgeTask::ASF, "ASF05"), JudgeTask::ASF); }),
              ErrorCode::InvalidLabel);
    EXPECT_EQ(code_of([] { parse_verdict("garbage", JudgeTask::QI); }), ErrorCode::MalformedOutput);
    EXPECT_EQ(code_of([] { parse_verdict("[1,2]", JudgeTask::QI); }), ErrorCode::MalformedOutput);
    EXPECT_EQ(code_of([] { parse_verdict(R"({"intent":"QI1"})", JudgeTask::QI); }), ErrorCode::MalformedOutput);
    EXPECT_EQ(code_of([] { parse_verdict(R"({"intent_reasoning":"r","intent":1})", JudgeTask::QI); }),
              ErrorCode::MalformedOutput);
    // field names are per task
    EXPECT_EQ(code_of([] { parse_verdict(payload(JudgeTask::SD, "ST1"), JudgeTask::ST); }),
              ErrorCode::MalformedOutput);
}

TEST(ParseVerdict, JsonRoundTrip) {
    auto v = parse_verdict(payload(JudgeTask::ST, "ST4"), JudgeTask::ST);
    v.attempts = 2;
    const auto back = verdict_from_json(to_json(v));
    EXPECT_EQ(back.label, 4);
    EXPECT_EQ(back.attempts, 2);
    JudgeVerdict u;
    u.task = JudgeTask::ASF;
    u.unevaluable = true;
    u.attempts = 3;
    EXPECT_TRUE(verdict_from_json(to_json(u)).unevaluable);
    EXPECT_FALSE(verdict_from_json(to_json(u)).label);
}

TEST(Classify, MockReturnsLabelFirstTry) {
    MockBackend mock({{JudgeTask::QI, "", "", {payload(JudgeTask::QI, "QI1")}}});
    const auto v = classify(JudgeTask::QI, full_inputs(), mock);
    EXPECT_EQ(v.label, 1);
    EXPECT_EQ(v.attempts, 1);
    EXPECT_FALSE(v.unevaluable);
}

TEST(Classify, RetriesUntilValid) {
    MockBackend mock({{JudgeTask::QI, "", "", {"garbage", payload(JudgeTask::QI, "QI9"), payload(JudgeTask::QI, "QI3")}}});
    const auto v = classify(JudgeTask::QI, full_inputs(), mock);
    EXPECT_EQ(v.label, 3);
    EXPECT_EQ(v.attempts, 3);
    EXPECT_EQ(mock.calls(), 3u);
}

TEST(Classify, ExhaustionIsUnevaluable) {
    MockBackend mock({}, MockFallback::Garbage);
    const auto v = classify(JudgeTask::ASF, full_inputs(), mock, {3});
    EXPECT_TRUE(v.unevaluable);
    EXPECT_FALSE(v.label);
    EXPECT_EQ(v.attempts, 3);
    EXPECT_FALSE(v.last_error.empty());
    EXPECT_EQ(classify(JudgeTask::ASF, full_inputs(), mock, {1}).attempts, 1);
}

TEST(Classify, TransportErrorsSurface) {
    MockBackend mock({}, MockFallback::Unavailable);
    EXPECT_EQ(code_of([&] { classify(JudgeTask::QI, full_inputs(), mock); }), ErrorCode::BackendUnavailable);
    EXPECT_EQ(code_of([&] { classify(JudgeTask::QI, full_inputs(), mock, {0}); }), ErrorCode::ConfigInvalid);
}

TEST(Classify, MockIsReferentiallyTransparent) {
    MockBackend mock;
    auto in = full_inputs();
    for (auto t : kAllTasks) {
        const auto a = classify(t, in, mock);
        const auto b = classify(t, in, mock);
        ASSERT_TRUE(a.label);
        EXPECT_GE(*a.label, 1);
        EXPECT_LE(*a.label, static_cast<int>(label_count(t)));
        EXPECT_EQ(to_json(a), to_json(b));
    }
}

TEST(MockBackend, FingerprintAndContainsRules) {
    const auto p = build_prompt(JudgeTask::SP, full_inputs());
    const auto fp = request_fingerprint(JudgeTask::SP, p.system, p.user);
    EXPECT_EQ(fp.size(), 64u);
    auto mock = MockBackend::from_json({{"fallback", "garbage"},
                                        {"rules",
                                         {{{"fingerprint", fp}, {"responses", {{{"purpose_reasoning", "r"}, {"purpose", "SP4"}}}}},
                                          {{"task", "ASF"}, {"contains", "3,000 mcg"}, {"responses", {payload(JudgeTask::ASF, "ASF2")}}}}}});
    EXPECT_EQ(classify(JudgeTask::SP, full_inputs(), mock).label, 4);
    EXPECT_EQ(classify(JudgeTask::ASF, full_inputs(), mock).label, 2);
    EXPECT_TRUE(classify(JudgeTask::SD, full_inputs(), mock).unevaluable);
    EXPECT_EQ(code_of([] { MockBackend::from_json({{"fallback", "nope"}}); }), ErrorCode::ConfigInvalid);
}

namespace {

std::vector<extract::NormalizedCitation> sample_citations() {
    std::vector<extract::NormalizedCitation> out;
    const char* urls[] = {"https://a.example/1", "https://b.example/2", "https://c.example/3", "https://gone.example/"};
    int n = 0;
    for (int q = 0; q < 4; ++q) {
        for (int k = 0; k < 3; ++k) {
            extract::NormalizedCitation c;
            c.response_id = "r" + std::to_string(q);
            c.ordinal = static_cast<std::size_t>(k);
            c.query_id = "Q0000" + std::to_string(q);
            c.query = "query " + std::to_string(q);
            c.model = q % 2 ? "m1" : "m2";
            c.provider = "p";
            c.source_url = urls[(q + k) % 4];
            c.cited_sentence = "Cited sentence number " + std::to_string(n++) + " in the response.";
            out.push_back(c);
        }
    }
    return out;
}

ContentMap sample_content() {
    return {{"https://a.example/1", "alpha page"}, {"https://b.example/2", "beta page"}, {"https://c.example/3", "gamma"}};
}

}  // namespace

TEST(Orchestrator, CallAccounting) {
    const auto cits = sample_citations();
    const auto plan = plan_jobs(cits, sample_content());
    std::size_t crawled = 0;
    for (const auto& c : cits) crawled += sample_content().count(c.source_url);
    EXPECT_EQ(plan.sources, 3u);
    EXPECT_EQ(plan.queries, 4u);
    EXPECT_EQ(plan.pairs, crawled);
    EXPECT_EQ(plan.skipped_uncrawled, cits.size() - crawled);
    EXPECT_EQ(plan.jobs.size(), 3 * plan.sources + plan.queries + plan.pairs);
}

TEST(Orchestrator, DeterministicAcrossConcurrency) {
    const auto cits = sample_citations();
    MockBackend a, b;
    const auto r1 = run_judging(cits, sample_content(), a, {{}, 1});
    const auto r2 = run_judging(cits, sample_content(), b, {{}, 8});
    ASSERT_EQ(r1.citations.size(), r2.citations.size());
    for (std::size_t i = 0; i < r1.citations.size(); ++i) EXPECT_EQ(to_json(r1.citations[i]), to_json(r2.citations[i]));
    EXPECT_EQ(to_json(r1.stats), to_json(r2.stats));
    EXPECT_EQ(a.calls(), r1.stats.tasks);
}

TEST(Orchestrator, UnevaluableVerdictsPropagate) {
    auto mock = MockBackend::from_json(
        {{"rules", {{{"task", "ASF"}, {"contains", "number 4 "}, {"responses", {"nope"}}}}}});
    const auto run = run_judging(sample_citations(), sample_content(), mock);
    std::size_t unev = 0;
    for (const auto& c : run.citations) {
        unev += c.unevaluable;
        if (c.unevaluable) {
            EXPECT_FALSE(c.asf);
        } else {
            EXPECT_TRUE(c.qi && c.sp && c.sd && c.st && c.asf);
        }
        EXPECT_EQ(to_json(judged_from_json(to_json(c))), to_json(c));
    }
    EXPECT_EQ(unev, 1u);
    EXPECT_EQ(run.stats.unevaluable[static_cast<std::size_t>(JudgeTask::ASF)], 1u);
}

TEST(Orchestrator, BackendFailureStopsRun) {
    MockBackend mock({}, MockFallback::Unavailable);
    EXPECT_EQ(code_of([&] { run_judging(sample_citations(), sample_content(), mock); }), ErrorCode::BackendUnavailable);
}

TEST(Reliability, PerfectAgreement) {
    std::vector<std::string> judge{"ASF1", "ASF5", "ASF4", "ASF5", "ASF2"};
    AnnotationTable t;
    for (const auto& l : judge) t.push_back({l, l, l});
    const auto r = validate_against_humans(judge, t);
    EXPECT_DOUBLE_EQ(r.kappa_consensus, 1.0);
    EXPECT_DOUBLE_EQ(r.alpha_annotators, 1.0);
    EXPECT_DOUBLE_EQ(r.raw_agreement, 1.0);
    EXPECT_DOUBLE_EQ(r.mean_pairwise_kappa, 1.0);
    EXPECT_DOUBLE_EQ(r.balanced_accuracy, 1.0);
}

TEST(Reliability, TwoClassKappaPointEight) {
    // 45 A/A, 45 B/B, 5 A/B, 5 B/A: p_o = 0.9, p_e = 0.5
    std::vector<std::string> judge;
    AnnotationTable t;
    auto add = [&](const char* j, const char* g, int n) {
        for (int i = 0; i < n; ++i) {
            judge.push_back(j);
            t.push_back({g, g, g});
        }
    };
    add("A", "A", 45);
    add("B", "B", 45);
    add("A", "B", 5);
    add("B", "A", 5);
    const auto r = validate_against_humans(judge, t);
    EXPECT_NEAR(r.kappa_consensus, 0.8, 1e-12);
    EXPECT_NEAR(r.raw_agreement, 0.9, 1e-12);
    EXPECT_NEAR(r.balanced_accuracy, 0.9, 1e-12);
    EXPECT_NEAR(r.mean_pairwise_kappa, 0.8, 1e-12);
}

TEST(Reliability, TiesExcludedAndCounted) {
    std::vector<std::string> judge{"A", "B", "A", "B"};
    AnnotationTable t{{"A", "A", "B"}, {"A", "B", "C"}, {"A", std::nullopt, "B"}, {"B", "B", "B"}};
    const auto r = validate_against_humans(judge, t);
    EXPECT_EQ(r.ties_excluded, 2u);
    EXPECT_EQ(r.used, 2u);
    EXPECT_DOUBLE_EQ(r.raw_agreement, 1.0);
    EXPECT_FALSE(majority_label(t[1]));
    EXPECT_EQ(majority_label(t[0]), "A");
}

TEST(Reliability, BalancedAccuracyHand) {
    // gold A x8 (judge right on 6), gold B x2 (judge right on 1): (0.75 + 0.5) / 2
    std::vector<std::string> judge;
    AnnotationTable t;
    for (int i = 0; i < 8; ++i) {
        judge.push_back(i < 6 ? "A" : "B");
        t.push_back({"A", "A", "A"});
    }
    for (int i = 0; i < 2; ++i) {
        judge.push_back(i < 1 ? "B" : "A");
        t.push_back({"B", "B", "B"});
    }
    EXPECT_NEAR(validate_against_humans(judge, t).balanced_accuracy, 0.625, 1e-12);
}

TEST(Reliability, Errors) {
    std::vector<std::string> judge{"A"};
    EXPECT_EQ(code_of([&] { validate_against_humans(judge, AnnotationTable{{"A"}}); }),
              ErrorCode::InsufficientAnnotators);
    EXPECT_EQ(code_of([&] { validate_against_humans(judge, AnnotationTable{}); }), ErrorCode::InvalidArgument);
}

TEST(HttpBackend, RequestBody) {
    HttpBackendConfig cfg;
    BackendRequest req{JudgeTask::QI, "sys", "usr", output_schema(JudgeTask::QI), 1};
    const auto body = HttpBackend::request_body(cfg, req);
    EXPECT_EQ(body["model"], "gpt-4o-mini-2024-07-18");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["max_tokens"], 4096);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "usr");
    EXPECT_EQ(body["response_format"]["type"], "json_schema");
}

TEST(HttpBackend, LocalServerRoundTrip) {
    httplib::Server srv;
    int hits = 0;
    srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        if (req.get_header_value("Authorization") != "Bearer test-key") {
            res.status = 401;
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        const auto content = payload(JudgeTask::QI, body["temperature"] == 0.0 ? "QI4" : "QI1");
        res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", content}}}}}}}.dump(),
                        "application/json");
    });
    srv.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread th([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.api_key = "test-key";
    HttpBackend ok(cfg);
    EXPECT_EQ(classify(JudgeTask::QI, full_inputs(), ok).label, 4);

    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/fail";
    HttpBackend bad(cfg);
    EXPECT_EQ(code_of([&] { classify(JudgeTask::QI, full_inputs(), bad); }), ErrorCode::BackendUnavailable);

    cfg.api_key.clear();
    cfg.api_key_env = "CITEAUDIT_TEST_UNSET_KEY";
    HttpBackend nokey(cfg);
    EXPECT_EQ(code_of([&] { classify(JudgeTask::QI, full_inputs(), nokey); }), ErrorCode::BackendUnavailable);
    srv.stop();
    th.join();
    EXPECT_EQ(hits, 1);
}

TEST(TokenBucket, PacesRequests) {
    TokenBucket bucket(1200.0);  // 20 per second
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) bucket.acquire();
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_GE(dt, 0.24);
    EXPECT_LT(dt, 2.0);
}
