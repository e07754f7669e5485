#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "../support/metrics_oracle.hpp"
#include "../support/planted_site.hpp"
#include "citeaudit/common/error.hpp"
#include "citeaudit/io/config.hpp"
#include "citeaudit/io/delimited.hpp"
#include "citeaudit/io/master.hpp"
#include "citeaudit/io/pipeline.hpp"
#include "citeaudit/io/replay.hpp"
#include "citeaudit/judge/backend.hpp"

using namespace citeaudit;
using namespace citeaudit::io;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("citeaudit_pipeline_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

MasterRecord record_from(const oracle::Row& r, std::int64_t id) {
    MasterRecord m;
    m.cit_id = id;
    m.query_id = r.query_id;
    m.site = "site";
    m.category = r.category;
    m.model_short = r.model;
    m.provider = r.provider;
    m.cited_sentence = "A sentence long enough to be evaluated here.";
    m.url_id = "S" + std::to_string(id);
    m.source_url = "https://example.org/" + std::to_string(id);
    m.clen = 4000;
    m.qi_label = "QI" + std::to_string(r.qi);
    m.sp_label = "SP" + std::to_string(r.sp);
    m.sd_label = "SD" + std::to_string(r.sd);
    m.st_label = "ST" + std::to_string(r.st);
    m.asf_label = "ASF" + std::to_string(r.asf);
    derive_fields(m, taxonomy::MatrixSet{});
    return m;
}

}  // namespace

// ---- config -------------------------------------------------------------------

TEST(Config, DefaultsAndRelativePaths) {
    const auto c = config_from_json(json{{"run_id", "t"}, {"paths", {{"responses", "raw.jsonl"}, {"out_dir", "o"}}}},
                                    "/base");
    EXPECT_EQ(c.responses, fs::path("/base/raw.jsonl"));
    EXPECT_EQ(c.out_dir, fs::path("/base/o"));
    EXPECT_EQ(c.master_path(), fs::path("/base/o/master.jsonl"));
    EXPECT_EQ(c.thresholds.ipa, 2);
    EXPECT_EQ(c.judge.backend, "mock");
    EXPECT_EQ(c.filter.min_chars, 20u);
    EXPECT_EQ(c.filter.min_words, 5u);
    const auto j = to_json(c);
    EXPECT_EQ(config_from_json(j).master_format, "jsonl");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_EQ(code_of([] { config_from_json(json{{"bogus", 1}}); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([] { config_from_json(json{{"filter", {{"min_char", 3}}}}); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([] { config_from_json(json{{"filter", {{"min_chars", "x"}}}}); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([] { config_from_json(json{{"judge", {{"backend", "other"}}}}); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([] { config_from_json(json{{"output", {{"master_format", "xlsx"}}}}); }),
              ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([] { config_from_json(json{{"aggregate", {{"density_edges", {5, 5}}}}}); }),
              ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::Io);
}

TEST(Config, ApiKeyComesFromEnvironmentFirst) {
    JudgeSettings s;
    s.backend = "http";
    s.http.api_key_env = "CITEAUDIT_TEST_KEY_UNSET_X";
    ::unsetenv(s.http.api_key_env.c_str());
    EXPECT_EQ(code_of([&] { make_backend(s); }), ErrorCode::ConfigInvalid);
    s.http.api_key = "from-config";
    EXPECT_NE(make_backend(s), nullptr);
    ::setenv(s.http.api_key_env.c_str(), "from-env", 1);
    EXPECT_NE(make_backend(s), nullptr);
    ::unsetenv(s.http.api_key_env.c_str());
    EXPECT_FALSE(to_json(PipelineConfig{})["judge"]["http"].contains("api_key"));
}

// ---- replay ---------------------------------------------------------------------

TEST(Replay, MatchesBruteForceOracle) {
    std::mt19937_64 rng(20241);
    const auto rows = oracle::random_corpus(rng, 100);
    std::vector<MasterRecord> records;
    for (std::size_t i = 0; i < rows.size(); ++i) records.push_back(record_from(rows[i], std::int64_t(i + 1)));

    const auto rep = replay(records);
    ASSERT_EQ(rep.citations, 100u);

    std::uint64_t fa = 0, fs_ = 0, ff = 0, crit = 0;
    double sum_asf = 0, sum_asf2 = 0;
    for (const auto& r : rows) {
        const auto s = oracle::score(r);
        fa += s.fa;
        fs_ += s.fs;
        ff += s.ff;
        crit += s.crit;
        sum_asf += s.asf;
        sum_asf2 += double(s.asf) * s.asf;
    }
    const auto& o = rep.aggregate.pool.overall;
    EXPECT_EQ(o.fail_ipa, fa);
    EXPECT_EQ(o.fail_ss, fs_);
    EXPECT_EQ(o.fail_asf, ff);
    EXPECT_EQ(o.critvm, crit);

    const auto expected = oracle::responses(rows);
    ASSERT_EQ(rep.aggregate.responses.size(), expected.size());
    for (const auto& r : rep.aggregate.responses) {
        const auto& e = expected.at(r.query_id + "\x1f" + r.model);
        EXPECT_EQ(int(r.n), e.n);
        EXPECT_NEAR(r.r_ipa, e.r_ipa, 1e-12);
        EXPECT_NEAR(r.r_ss, e.r_ss, 1e-12);
        EXPECT_NEAR(r.sfr, e.sfr, 1e-12);
        EXPECT_EQ(r.any_exposure, e.any);
    }

    ASSERT_EQ(rep.stats.dimensions.size(), 3u);
    const auto& asf = rep.stats.dimensions[0];
    EXPECT_EQ(asf.dimension, "ASF");
    const double n = 100.0, mean = sum_asf / n;
    EXPECT_NEAR(asf.mean, mean, 1e-12);
    EXPECT_NEAR(asf.sd, std::sqrt((sum_asf2 - n * mean * mean) / (n - 1)), 1e-9);
    EXPECT_NEAR(asf.failure_rate, double(ff) / n, 1e-12);

    // Source-type shares sum to one and rows are ordered by SFR.
    for (std::size_t i = 0; i < rep.stats.source_types.size(); ++i) {
        const auto& st = rep.stats.source_types[i];
        double total = 0;
        for (double s : st.shares) total += s;
        EXPECT_NEAR(total, 1.0, 1e-12);
        if (i) EXPECT_LE(rep.stats.source_types[i - 1].sfr, st.sfr);
    }
}

TEST(Replay, SingleCleanRowHasZeroRates) {
    oracle::Row r{"Q1", "m", "p", "Science", 3, 3, 8, 3, 5};  // IPA 5, SS 4, ASF 5
    const auto rep = replay(std::vector<MasterRecord>{record_from(r, 1)});
    EXPECT_EQ(rep.aggregate.pool.overall.afr(), 0.0);
    EXPECT_EQ(rep.aggregate.pool.overall.sfr(), 0.0);
    EXPECT_EQ(rep.aggregate.pool.overall.ffr(), 0.0);
    EXPECT_EQ(rep.aggregate.pool.overall.critvm, 0u);
    EXPECT_FALSE(rep.stats.variance[0].decomposition.has_value());
    EXPECT_EQ(code_of([] { replay(std::vector<MasterRecord>{}); }), ErrorCode::InvalidArgument);
}

TEST(Replay, BundleIsDeterministic) {
    std::mt19937_64 rng(7);
    const auto rows = oracle::random_corpus(rng, 80);
    std::vector<MasterRecord> records;
    for (std::size_t i = 0; i < rows.size(); ++i) records.push_back(record_from(rows[i], std::int64_t(i + 1)));
    const auto a = scratch("bundle_a"), b = scratch("bundle_b");
    const auto files_a = write_replay_bundle(a, replay(records));
    const auto files_b = write_replay_bundle(b, replay(records));
    ASSERT_EQ(files_a.size(), files_b.size());
    ASSERT_FALSE(files_a.empty());
    for (std::size_t i = 0; i < files_a.size(); ++i) {
        EXPECT_EQ(files_a[i].lexically_relative(a), files_b[i].lexically_relative(b));
        EXPECT_EQ(read_file(files_a[i]), read_file(files_b[i])) << files_a[i];
    }
    EXPECT_TRUE(fs::exists(a / "tables" / "pool.tsv"));
    EXPECT_TRUE(fs::exists(a / "stats.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

// ---- pipeline -----------------------------------------------------------------

namespace {

std::string article(const std::string& topic) {
    std::string p;
    while (p.size() < 600) p += "This page explains " + topic + " in plain terms with several sentences of detail. ";
    return "<html><head><title>" + topic + "</title></head><body><article><p>" + p +
           "</p></article></body></html>";
}

struct PipelineFixture : ::testing::Test {
    testsupport::PlantedSite site;
    fs::path dir;
    PipelineConfig config;

    void SetUp() override {
        dir = scratch(::testing::UnitTest::GetInstance()->current_test_info()->name());
        const char* hosts[] = {"alpha.test", "beta.test", "gamma.test"};
        std::ofstream raw(dir / "raw.jsonl");
        for (int q = 1; q <= 4; ++q) {
            json citations = json::array();
            std::string body;
            for (int k = 0; k < 3; ++k) {
                const std::string host = hosts[(q + k) % 3];
                const std::string path = "/doc" + std::to_string(q) + "_" + std::to_string(k);
                site.page(host, path, 200, "text/html", article(host + path));
                citations.push_back("http://" + host + path);
                body += "Statement number " + std::to_string(k + 1) + " about query " + std::to_string(q) +
                        " has enough words.[" + std::to_string(k + 1) + "] ";
            }
            json resp{{"response_id", "r" + std::to_string(q)}, {"provider", "perplexity"},
                      {"query_id", "Q" + std::to_string(q)},     {"model", q % 2 ? "sonar" : "sonar-pro"},
                      {"category", q % 2 ? "Science" : "Health"}, {"site", "example"},
                      {"body_text", body},                        {"citation_payload", {{"citations", citations}}}};
            raw << resp.dump() << "\n";
        }
        raw << json{{"response_id", "r-empty"}, {"provider", "perplexity"}, {"query_id", "Q9"}, {"model", "sonar"},
                    {"body_text", "No sources here."}, {"citation_payload", {{"citations", json::array()}}}}
                   .dump()
            << "\n";
        raw.close();

        config.run_id = "unit";
        config.responses = dir / "raw.jsonl";
        config.out_dir = dir / "out";
        config.crawl.per_domain_delay = 0.02;
        config.crawl.fetch_timeout = 3;
        config.crawl.redirect_timeout = 3;
        for (const auto* h : hosts) config.crawl.host_overrides[h] = site.address();
        config.judge.concurrency = 4;
    }
    void TearDown() override { fs::remove_all(dir); }
};

}  // namespace

TEST_F(PipelineFixture, ExtractThroughScoreWritesManifest) {
    judge::MockBackend mock;
    RunOptions opts;
    opts.backend = &mock;
    const auto res = run_pipeline(config, stage_range(Stage::Extract, Stage::Score), opts);
    ASSERT_EQ(res.stages.size(), 5u);
    for (const auto& s : res.stages) EXPECT_FALSE(s.skipped) << to_string(s.stage);

    const auto manifest = read_manifest(config.out_dir);
    EXPECT_EQ(manifest["stages"].size(), 5u);
    for (const char* s : {"extract", "crawl", "judge", "filter", "score"}) {
        ASSERT_TRUE(manifest["stages"].contains(s)) << s;
        EXPECT_FALSE(manifest["stages"][s]["outputs"].empty());
    }

    MasterReadOptions ro;
    ro.strict = true;
    const auto master = read_master(config.master_path(), ro);
    EXPECT_TRUE(master.violations.empty());
    EXPECT_GT(master.records.size(), 0u);
    EXPECT_LE(master.records.size(), 12u);
    for (const auto& r : master.records) {
        EXPECT_EQ(r.provider, "perplexity");
        EXPECT_GT(r.clen, 0);
        EXPECT_EQ(r.url_id.front(), 'S');
    }
    const auto crawl_report = json::parse(read_file(config.out_dir / "crawl_report.json"));
    EXPECT_EQ(crawl_report["citations"]["total"], 12);
    EXPECT_EQ(crawl_report["citations"]["crawled"], 12);

    // Rerun: every stage is a no-op.
    const auto again = run_pipeline(config, stage_range(Stage::Extract, Stage::Score), opts);
    for (const auto& s : again.stages) EXPECT_TRUE(s.skipped) << to_string(s.stage);
    const auto log = read_manifest(config.out_dir)["log"];
    EXPECT_EQ(log.size(), 10u);
    EXPECT_EQ(log.back()["action"], "skipped");

    // Touching an output reruns that stage.
    write_file(config.out_dir / "evaluable.jsonl", "");
    const auto third = run_pipeline(config, stage_range(Stage::Filter, Stage::Score), opts);
    EXPECT_FALSE(third.stages[0].skipped);

    // Downstream aggregate and stats produce report bundles.
    const auto tail = run_pipeline(config, stage_range(Stage::Aggregate, Stage::Stats), opts);
    EXPECT_EQ(tail.stages.size(), 2u);
    EXPECT_TRUE(fs::exists(config.out_dir / "reports" / "aggregate.json"));
    EXPECT_TRUE(fs::exists(config.out_dir / "reports" / "stats.json"));
    const auto agg = json::parse(read_file(config.out_dir / "reports" / "aggregate.json"));
    EXPECT_EQ(agg["zero_citation_responses"], 1);
}

TEST_F(PipelineFixture, MissingInputsAndBadStageLists) {
    EXPECT_EQ(code_of([&] { run_pipeline(config, {Stage::Judge}); }), ErrorCode::StageInputMissing);
    EXPECT_EQ(code_of([&] { run_pipeline(config, {Stage::Extract, Stage::Judge}); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([&] { run_pipeline(config, {}); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of([&] { stage_range(Stage::Score, Stage::Crawl); }), ErrorCode::ConfigInvalid);
    EXPECT_EQ(parse_stage("judge"), Stage::Judge);
    EXPECT_FALSE(parse_stage("nope").has_value());
}

TEST_F(PipelineFixture, ExhaustedJudgeMarksCitationsUnevaluable) {
    judge::MockBackend broken({}, judge::MockFallback::Garbage);
    RunOptions opts;
    opts.backend = &broken;
    run_pipeline(config, stage_range(Stage::Extract, Stage::Filter), opts);
    const auto report = json::parse(read_file(config.out_dir / "filter_report.json"));
    EXPECT_EQ(read_file(config.out_dir / "evaluable.jsonl"), "");
    EXPECT_EQ(code_of([&] { run_pipeline(config, {Stage::Score}, opts); }), std::nullopt);
    EXPECT_EQ(code_of([&] { run_pipeline(config, {Stage::Aggregate}, opts); }), ErrorCode::SchemaMismatch);
    EXPECT_FALSE(report.dump().empty());
}
