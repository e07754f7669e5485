#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/metrics_oracle.hpp"
#include "citeaudit/common/error.hpp"
#include "citeaudit/metrics/metrics.hpp"

using namespace citeaudit;
using namespace citeaudit::metrics;
using taxonomy::from_index;

namespace {

CitationLabels labels(int qi, int sp, int sd, int st, int asf) {
    return {static_cast<IntentLabel>(qi), static_cast<PurposeLabel>(sp), static_cast<DomainLabel>(sd),
            static_cast<TypeLabel>(st), static_cast<FidelityLabel>(asf)};
}

std::vector<ScoredCitation> to_pool(const std::vector<oracle::Row>& rows) {
    std::vector<ScoredCitation> pool;
    for (const auto& r : rows) {
        const auto s = score_citation(labels(r.qi, r.sp, r.sd, r.st, r.asf));
        pool.push_back({r.query_id, r.model, r.provider, r.category, static_cast<DomainLabel>(r.sd),
                        static_cast<TypeLabel>(r.st), s.ipa, s.ss, s.asf});
    }
    return pool;
}

ScoredCitation cite(std::string q, std::string model, int ipa, int ss, int asf, int sd = 10) {
    std::string provider = "p-" + model;
    return {std::move(q), std::move(model), std::move(provider), "cat", static_cast<DomainLabel>(sd), TypeLabel::ST1,
            ipa, ss, asf};
}

}  // namespace

TEST(ScoreCitation, AllThreeFail) {
    const auto s = score_citation(labels(1, 1, 1, 5, 1));
    EXPECT_EQ(s.ipa, 1);
    EXPECT_EQ(s.ss, 1);
    EXPECT_EQ(s.asf, 1);
    EXPECT_TRUE(s.critvm);
}

TEST(ScoreCitation, AllFivesPass) {
    const auto s = score_citation(labels(1, 2, 2, 1, 5));
    EXPECT_EQ(s.ipa, 5);
    EXPECT_EQ(s.ss, 5);
    EXPECT_EQ(s.asf, 5);
    EXPECT_FALSE(s.fail_ipa || s.fail_ss || s.fail_asf || s.critvm);
}

TEST(ScoreCitation, FidelityOnlyFailure) {
    const auto s = score_citation(labels(2, 2, 1, 1, 1));
    EXPECT_EQ(s.ipa, 5);
    EXPECT_EQ(s.ss, 5);
    EXPECT_TRUE(s.fail_asf);
    EXPECT_FALSE(s.fail_ipa);
    EXPECT_FALSE(s.fail_ss);
    EXPECT_FALSE(s.critvm);
}

TEST(ScoreCitation, AllLabelCombinationsMatchOracle) {
    for (int qi = 1; qi <= 5; ++qi)
        for (int sp = 1; sp <= 6; ++sp)
            for (int sd = 1; sd <= 10; ++sd)
                for (int st = 1; st <= 6; ++st)
                    for (int asf = 1; asf <= 5; ++asf) {
                        const auto s = score_citation(labels(qi, sp, sd, st, asf));
                        const auto o = oracle::score({"", "", "", "", qi, sp, sd, st, asf});
                        ASSERT_EQ(s.ipa, o.ipa);
                        ASSERT_EQ(s.ss, o.ss);
                        ASSERT_EQ(s.critvm, o.crit);
                    }
}

TEST(AggregateResponse, FidelityRateExample) {
    const Thresholds t;
    std::vector<CitationScores> s{apply_thresholds(5, 3, 5, t), apply_thresholds(5, 3, 5, t),
                                  apply_thresholds(5, 3, 1, t), apply_thresholds(5, 3, 2, t)};
    const auto r = aggregate_response(s);
    EXPECT_EQ(r.n, 4u);
    EXPECT_DOUBLE_EQ(r.ffr, 0.5);
    EXPECT_TRUE(r.r_ffr);
    EXPECT_DOUBLE_EQ(r.afr, 0.0);
    EXPECT_DOUBLE_EQ(r.sfr, 0.0);
    EXPECT_TRUE(r.any_exposure);
    EXPECT_DOUBLE_EQ(r.r_asf, 3.25);
}

TEST(AggregateResponse, SingleAllPass) {
    std::vector<CitationScores> s{apply_thresholds(5, 5, 5, {})};
    const auto r = aggregate_response(s);
    EXPECT_EQ(r.afr + r.sfr + r.ffr, 0.0);
    EXPECT_FALSE(r.r_afr || r.r_sfr || r.r_ffr || r.any_exposure);
}

TEST(AggregateResponse, EmptyThrows) {
    try {
        aggregate_response({});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyResponse);
    }
}

TEST(AggregateResponse, MatchesOracleOnRandomPools) {
    std::mt19937_64 rng(42);
    for (int n : {10, 200, 1000}) {
        const auto rows = oracle::random_corpus(rng, n);
        const auto expected = oracle::responses(rows);
        const auto got = aggregate_responses(to_pool(rows));
        ASSERT_EQ(got.size(), expected.size());
        for (const auto& r : got) {
            const auto& e = expected.at(r.query_id + "\x1f" + r.model);
            EXPECT_EQ(int(r.n), e.n);
            EXPECT_EQ(r.r_ipa, e.r_ipa);
            EXPECT_EQ(r.r_ss, e.r_ss);
            EXPECT_EQ(r.afr, e.afr);
            EXPECT_EQ(r.sfr, e.sfr);
            EXPECT_EQ(r.ffr, e.ffr);
            EXPECT_EQ(r.r_afr, e.r_afr);
            EXPECT_EQ(r.r_sfr, e.r_sfr);
            EXPECT_EQ(r.r_ffr, e.r_ffr);
            EXPECT_EQ(r.any_exposure, e.any);
            EXPECT_EQ(r.r_ffr, r.ffr > 0);
        }
    }
}

TEST(PoolReport, ExpectedCritvmIsProductOfMarginals) {
    // 1000 citations: 51 IPA failures, 271 SS failures, 306 ASF failures, disjoint.
    std::vector<ScoredCitation> pool;
    for (int i = 0; i < 1000; ++i) {
        const int ipa = i < 51 ? 1 : 5;
        const int ss = (i >= 51 && i < 322) ? 1 : 5;
        const int asf = (i >= 322 && i < 628) ? 1 : 5;
        pool.push_back(cite("Q" + std::to_string(i / 10), "m", ipa, ss, asf));
    }
    const auto rep = pool_report(pool);
    EXPECT_DOUBLE_EQ(rep.overall.afr(), 0.051);
    EXPECT_DOUBLE_EQ(rep.overall.sfr(), 0.271);
    EXPECT_DOUBLE_EQ(rep.overall.ffr(), 0.306);
    EXPECT_NEAR(rep.expected_critvm_rate, 0.051 * 0.306 * 0.271, 1e-15);
    EXPECT_NEAR(rep.expected_critvm_rate * 100, 0.42, 0.005);
    EXPECT_EQ(rep.overall.critvm, 0u);
    EXPECT_EQ(rep.venn.ipa_only, 51u);
    EXPECT_EQ(rep.venn.ss_only, 271u);
    EXPECT_EQ(rep.venn.asf_only, 306u);
}

TEST(PoolReport, EverythingFailingFillsTripleRegion) {
    std::vector<ScoredCitation> pool;
    for (int i = 0; i < 30; ++i) pool.push_back(cite("Q" + std::to_string(i % 4), "m", 1, 2, 1));
    const auto rep = pool_report(pool);
    EXPECT_EQ(rep.venn.all_three, 30u);
    EXPECT_EQ(rep.venn.union_count(), 30u);
    EXPECT_EQ(rep.overall.critvm, 30u);
}

TEST(PoolReport, VennRegionsSumToUnion) {
    std::mt19937_64 rng(9);
    const auto pool = to_pool(oracle::random_corpus(rng, 2000));
    const auto rep = pool_report(pool);
    std::uint64_t any = 0;
    for (const auto& c : pool) any += (c.ipa <= 2 || c.ss <= 2 || c.asf <= 2);
    EXPECT_EQ(rep.venn.union_count(), any);
    EXPECT_EQ(rep.venn.all_three, rep.overall.critvm);
}

TEST(PoolReport, YmylSplitAndOddsRatio) {
    std::vector<ScoredCitation> pool;
    // YMYL: 3 fail / 7 pass; other: 7 fail / 3 pass (failure on SS only)
    for (int i = 0; i < 10; ++i) pool.push_back(cite("Q1", "m", 5, i < 3 ? 1 : 5, 5, 1));
    for (int i = 0; i < 10; ++i) pool.push_back(cite("Q2", "m", 5, i < 7 ? 1 : 5, 5, 6));
    const auto rep = pool_report(pool);
    EXPECT_EQ(rep.ymyl.ymyl.n, 10u);
    EXPECT_DOUBLE_EQ(rep.ymyl.ymyl.sfr(), 0.3);
    EXPECT_DOUBLE_EQ(rep.ymyl.non_ymyl.sfr(), 0.7);
    EXPECT_NEAR(rep.ymyl.fisher.odds_ratio, 9.0 / 49.0, 1e-12);
}

TEST(PoolReport, DensityBinsByCitationsPerResponse) {
    std::vector<ScoredCitation> pool;
    auto add_response = [&](const std::string& q, int n, int failing_asf) {
        for (int i = 0; i < n; ++i) pool.push_back(cite(q, "m", 5, 5, i < failing_asf ? 1 : 5));
    };
    add_response("Q1", 3, 1);    // 1-5
    add_response("Q2", 5, 0);    // 1-5
    add_response("Q3", 6, 3);    // 6-10
    add_response("Q4", 20, 0);   // 16-20
    add_response("Q5", 21, 21);  // 20+
    const auto rep = pool_report(pool);
    ASSERT_EQ(rep.density.size(), 5u);
    EXPECT_EQ(rep.density[0].label, "1-5");
    EXPECT_EQ(rep.density[4].label, "20+");
    EXPECT_EQ(rep.density[0].responses.responses, 2u);
    EXPECT_EQ(rep.density[0].citations.n, 8u);
    EXPECT_DOUBLE_EQ(rep.density[0].citations.ffr(), 1.0 / 8.0);
    EXPECT_DOUBLE_EQ(rep.density[1].citations.ffr(), 0.5);
    EXPECT_EQ(rep.density[2].responses.responses, 0u);
    EXPECT_EQ(rep.density[3].citations.n, 20u);
    EXPECT_DOUBLE_EQ(rep.density[4].citations.ffr(), 1.0);
    EXPECT_EQ(rep.exposure.responses, 5u);
    EXPECT_EQ(rep.exposure.r_ffr, 3u);
}

TEST(PoolReport, ModelAndProviderTables) {
    std::vector<ScoredCitation> pool{cite("Q1", "a", 1, 5, 5), cite("Q1", "a", 5, 5, 5), cite("Q1", "b", 5, 5, 5)};
    const auto rep = pool_report(pool);
    ASSERT_EQ(rep.by_model.size(), 2u);
    EXPECT_EQ(rep.by_model[0].key, "a");
    EXPECT_EQ(rep.by_model[0].provider, "p-a");
    EXPECT_DOUBLE_EQ(rep.by_model[0].citations.afr(), 0.5);
    EXPECT_EQ(rep.by_model[0].responses.r_afr, 1u);
    EXPECT_EQ(rep.by_provider.size(), 2u);
}

TEST(PoolReport, LoweringThresholdNeverIncreasesFailures) {
    std::mt19937_64 rng(77);
    const auto pool = to_pool(oracle::random_corpus(rng, 1500));
    for (int ti = 2; ti <= 3; ++ti)
        for (int ts = 2; ts <= 3; ++ts)
            for (int ta = 2; ta <= 3; ++ta) {
                PoolOptions hi;
                hi.thresholds = {ti, ta, ts};
                PoolOptions lo;
                lo.thresholds = {ti - 1, ta - 1, ts - 1};
                const auto a = pool_report(pool, hi).overall;
                const auto b = pool_report(pool, lo).overall;
                EXPECT_LE(b.fail_ipa, a.fail_ipa);
                EXPECT_LE(b.fail_ss, a.fail_ss);
                EXPECT_LE(b.fail_asf, a.fail_asf);
                EXPECT_LE(b.critvm, a.critvm);
            }
}

TEST(PoolReport, IndependentFailuresMatchExpectation) {
    std::mt19937_64 rng(2024);
    std::bernoulli_distribution fa(0.3), fs(0.3), ff(0.3);
    std::vector<ScoredCitation> pool;
    for (int i = 0; i < 100000; ++i)
        pool.push_back(cite("Q" + std::to_string(i / 10), "m", fa(rng) ? 1 : 5, fs(rng) ? 1 : 5, ff(rng) ? 1 : 5));
    const auto rep = pool_report(pool);
    const double p = rep.expected_critvm_rate;
    const double sd = std::sqrt(p * (1 - p) / 100000.0);
    EXPECT_LT(std::fabs(rep.overall.critvm_rate() - p), 4 * sd);
}

TEST(ThresholdSensitivity, DefaultVariantsAndBaselineTau) {
    const auto variants = default_threshold_variants();
    ASSERT_EQ(variants.size(), 7u);
    EXPECT_EQ(variants[1].name, "as_loose");
    EXPECT_EQ(variants[1].thresholds, (Thresholds{2, 3, 2}));

    std::mt19937_64 rng(5);
    const auto pool = to_pool(oracle::random_corpus(rng, 5000));
    const auto res = threshold_sensitivity(pool, variants);
    ASSERT_EQ(res.size(), 7u);
    EXPECT_DOUBLE_EQ(res[0].tau_model, 1.0);
    EXPECT_DOUBLE_EQ(res[0].tau_category, 1.0);
    std::uint64_t brute = 0;
    for (const auto& c : pool) brute += (c.ipa <= 2 && c.ss <= 3 && c.asf <= 2);
    EXPECT_EQ(res[4].critvm, brute);  // ss_loose
}

TEST(ThresholdSensitivity, RankSwapGivesMinusOne) {
    // Model a: IPA-heavy critical failures only under ipa_loose; model b the reverse at baseline.
    std::vector<ScoredCitation> pool;
    for (int i = 0; i < 10; ++i) pool.push_back(cite("Q" + std::to_string(i), "a", 3, 1, 1));
    for (int i = 0; i < 10; ++i) pool.push_back(cite("Q" + std::to_string(i), "b", i < 2 ? 1 : 5, 1, 1));
    std::vector<ThresholdVariant> v{{"baseline", {2, 2, 2}}, {"ipa_loose", {3, 2, 2}}};
    const auto res = threshold_sensitivity(pool, v);
    // baseline: a 0%, b 20%; ipa_loose: a 100%, b 20%
    EXPECT_EQ(res[0].model_ranking, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(res[1].model_ranking, (std::vector<std::string>{"b", "a"}));
    EXPECT_DOUBLE_EQ(res[1].tau_model, -1.0);
}

TEST(ThresholdSensitivity, RequiresBaseline) {
    std::vector<ThresholdVariant> v{{"ipa_loose", {3, 2, 2}}};
    std::vector<ScoredCitation> pool{cite("Q", "m", 1, 1, 1)};
    EXPECT_THROW(threshold_sensitivity(pool, v), Error);
}
