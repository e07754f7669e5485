#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "citeaudit/common/error.hpp"
#include "citeaudit/stats/special.hpp"
#include "citeaudit/stats/stats.hpp"

using namespace citeaudit;
using namespace citeaudit::stats;

namespace {

// Brute-force tau-b over all pairs.
double tau_b_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    double conc = 0, disc = 0, tx = 0, ty = 0;
    for (size_t i = 0; i < x.size(); ++i)
        for (size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0 && dy == 0) continue;
            if (dx == 0) { tx += 1; continue; }
            if (dy == 0) { ty += 1; continue; }
            if ((dx > 0) == (dy > 0)) conc += 1;
            else disc += 1;
        }
    return (conc - disc) / std::sqrt((conc + disc + tx) * (conc + disc + ty));
}

std::vector<double> ranks_oracle(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) less += 1;
            else if (w == v[i]) equal += 1;
        }
        r[i] = less + (equal + 1) / 2.0;
    }
    return r;
}

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

std::vector<std::string> repeat(std::initializer_list<std::pair<const char*, int>> parts) {
    std::vector<std::string> out;
    for (auto [s, n] : parts)
        for (int i = 0; i < n; ++i) out.emplace_back(s);
    return out;
}

}  // namespace

TEST(Kappa, TwoByTwoFixtureGivesPointEight) {
    // 45 yes/yes, 45 no/no, 5 yes/no, 5 no/yes: p_o = .9, p_e = .5
    auto a = repeat({{"yes", 45}, {"no", 45}, {"yes", 5}, {"no", 5}});
    auto b = repeat({{"yes", 45}, {"no", 45}, {"no", 5}, {"yes", 5}});
    EXPECT_NEAR(cohen_kappa(a, b), 0.8, 1e-12);
    const auto table = ConfusionTable::from_pairs(a, b);
    EXPECT_EQ(table.total(), 100u);
    EXPECT_NEAR(cohen_kappa(table), 0.8, 1e-12);
}

TEST(Kappa, IdenticalRatersGiveOne) {
    std::vector<std::string> a{"SD1", "SD2", "SD3", "SD1", "SD7"};
    EXPECT_DOUBLE_EQ(cohen_kappa(a, a), 1.0);
}

TEST(Kappa, DegenerateMarginalsThrow) {
    std::vector<std::string> a(10, "QI1");
    try {
        cohen_kappa(a, a);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateMarginals);
    }
}

TEST(Kappa, InvariantUnderLabelRenaming) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> d(0, 3);
    std::vector<std::string> a, b, ra, rb;
    const char* names[] = {"A", "B", "C", "D"};
    const char* renamed[] = {"zeta", "alpha", "mu", "beta"};
    for (int i = 0; i < 200; ++i) {
        int x = d(rng);
        int y = (d(rng) == 0) ? d(rng) : x;
        a.push_back(names[x]);
        b.push_back(names[y]);
        ra.push_back(renamed[x]);
        rb.push_back(renamed[y]);
    }
    EXPECT_NEAR(cohen_kappa(a, b), cohen_kappa(ra, rb), 1e-12);
}

TEST(Alpha, PerfectAgreementIsOne) {
    NominalGrid g;
    for (const char* s : {"a", "b", "c", "a", "b"}) g.push_back({std::string(s), std::string(s), std::string(s)});
    EXPECT_NEAR(krippendorff_alpha_nominal(g), 1.0, 1e-12);
}

TEST(Alpha, KnownTwoRaterValue) {
    // Two raters, four units, values (a,a) (a,b) (b,b) (b,b).
    // Coincidences: o_aa=2, o_ab=o_ba=1, o_bb=4; n_a=3, n_b=5, n=8.
    // D_o = 2/8, D_e = 2*3*5/(8*7) -> alpha = 1 - (2/8)/(30/56).
    NominalGrid g{{std::string("a"), std::string("a")},
                  {std::string("a"), std::string("b")},
                  {std::string("b"), std::string("b")},
                  {std::string("b"), std::string("b")}};
    EXPECT_NEAR(krippendorff_alpha_nominal(g), 1.0 - (2.0 / 8.0) / (30.0 / 56.0), 1e-12);
}

TEST(Alpha, MissingCellsAreSkipped) {
    NominalGrid full{{std::string("a"), std::string("a")},
                     {std::string("a"), std::string("b")},
                     {std::string("b"), std::string("b")},
                     {std::string("b"), std::string("b")}};
    NominalGrid with_gap = full;
    with_gap.push_back({std::string("a"), std::nullopt});
    EXPECT_NEAR(krippendorff_alpha_nominal(full), krippendorff_alpha_nominal(with_gap), 1e-12);
}

TEST(Icc, MatchesHandComputedAnova) {
    // 4 targets x 3 raters
    const std::vector<double> v{9, 2, 5, 6, 1, 3, 8, 4, 6, 7, 1, 2};
    const size_t n = 4, k = 3;
    double grand = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ssr = 0, ssc = 0, sst = 0;
    for (size_t t = 0; t < n; ++t) {
        double m = 0;
        for (size_t r = 0; r < k; ++r) m += v[t * k + r];
        m /= k;
        ssr += k * (m - grand) * (m - grand);
    }
    for (size_t r = 0; r < k; ++r) {
        double m = 0;
        for (size_t t = 0; t < n; ++t) m += v[t * k + r];
        m /= n;
        ssc += n * (m - grand) * (m - grand);
    }
    for (double x : v) sst += (x - grand) * (x - grand);
    const double msr = ssr / (n - 1), msc = ssc / (k - 1), mse = (sst - ssr - ssc) / ((n - 1) * (k - 1));
    const double expected = (msr - mse) / (msr + (msc - mse) / n);
    const double expected_single = (msr - mse) / (msr + (k - 1) * mse + k * (msc - mse) / n);

    const auto res = icc_2k(RatingsGrid(n, k, v));
    EXPECT_NEAR(res.ms_rows, msr, 1e-12);
    EXPECT_NEAR(res.ms_cols, msc, 1e-12);
    EXPECT_NEAR(res.ms_error, mse, 1e-12);
    EXPECT_NEAR(res.icc, expected, 1e-12);
    EXPECT_NEAR(res.icc_single, expected_single, 1e-12);
    EXPECT_LE(res.ci_low, res.icc);
    EXPECT_GE(res.ci_high, res.icc);
}

TEST(Icc, IdenticalRatersGiveOne) {
    std::vector<double> v;
    for (double x : {1.0, 3.0, 2.0, 5.0, 4.0, 4.5})
        for (int r = 0; r < 3; ++r) v.push_back(x);
    const auto res = icc_2k(RatingsGrid(6, 3, v));
    EXPECT_NEAR(res.icc, 1.0, 1e-12);
    EXPECT_NEAR(res.ci_low, 1.0, 1e-9);
}

TEST(Icc, NeedsTwoRatersAndRowVariance) {
    EXPECT_THROW(RatingsGrid(3, 1, {1, 2, 3}), Error);
    try {
        icc_2k(RatingsGrid(3, 2, {2, 2, 2, 2, 2, 2}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroRowVariance);
    }
}

TEST(Icc, ConfidenceIntervalBracketsEstimate) {
    const std::vector<double> v{1, 2, 1, 3, 3, 4, 5, 5, 5, 2, 1, 2, 4, 4, 3, 5, 4, 5};
    const auto res = icc_2k(RatingsGrid(6, 3, v));
    EXPECT_GT(res.icc, 0.85);
    EXPECT_LT(res.ci_low, res.icc);
    EXPECT_GT(res.ci_high, res.icc);
    EXPECT_LE(res.ci_high, 1.0);
}

TEST(Correlation, PearsonAgainstOracle) {
    std::mt19937 rng(3);
    std::normal_distribution<double> d;
    std::vector<double> x(300), y(300);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = d(rng);
        y[i] = 0.6 * x[i] + d(rng);
    }
    EXPECT_NEAR(pearson_r(x, y), pearson_oracle(x, y), 1e-10);
    EXPECT_NEAR(pearson_r(x, x), 1.0, 1e-12);
    std::vector<double> c(300, 1.0);
    EXPECT_THROW(pearson_r(x, c), Error);
}

TEST(Correlation, CccIdentityAndShiftPenalty) {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> shifted{2, 3, 4, 5, 6};
    EXPECT_NEAR(concordance_ccc(x, x), 1.0, 1e-12);
    // population moments: var=2, cov=2, mean diff=1 -> 2*2/(2+2+1)
    EXPECT_NEAR(concordance_ccc(x, shifted), 0.8, 1e-12);
    EXPECT_NEAR(pearson_r(x, shifted), 1.0, 1e-12);
    EXPECT_NEAR(mean_absolute_deviation(x, shifted), 1.0, 1e-12);
}

TEST(Ranks, AverageTies) {
    std::vector<double> v{10, 20, 20, 5, 20};
    const auto r = average_ranks(v);
    EXPECT_EQ(r, (std::vector<double>{2, 4, 4, 1, 4}));
    EXPECT_EQ(r, ranks_oracle(v));
}

TEST(Correlation, SpearmanEqualsPearsonOnRanks) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> d(1, 6);
    std::vector<double> x(150), y(150);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = d(rng);
        y[i] = x[i] + d(rng);
    }
    EXPECT_NEAR(spearman_rho(x, y), pearson_oracle(ranks_oracle(x), ranks_oracle(y)), 1e-10);
}

TEST(Correlation, KendallTauBAgainstBruteForce) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> d(1, trial % 2 ? 4 : 50);
        std::vector<double> x(60 + trial), y(60 + trial);
        for (size_t i = 0; i < x.size(); ++i) {
            x[i] = d(rng);
            y[i] = d(rng) + (trial % 3 == 0 ? x[i] : 0);
        }
        EXPECT_NEAR(kendall_tau_b(x, y), tau_b_oracle(x, y), 1e-12) << "trial " << trial;
    }
}

TEST(Correlation, KendallSmallKnownValues) {
    std::vector<double> base{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> rev(base.rbegin(), base.rend());
    EXPECT_NEAR(kendall_tau_b(base, base), 1.0, 1e-12);
    EXPECT_NEAR(kendall_tau_b(base, rev), -1.0, 1e-12);
    std::vector<double> tied(7, 2.0);
    EXPECT_TRUE(std::isnan(kendall_tau_b(base, tied)));
}

TEST(Correlation, RankStatisticsInvariantUnderMonotoneTransform) {
    std::mt19937 rng(19);
    std::normal_distribution<double> d;
    std::vector<double> x(80), y(80), ex(80), cy(80);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = d(rng);
        y[i] = x[i] + d(rng);
        ex[i] = std::exp(x[i]);
        cy[i] = y[i] * y[i] * y[i];
    }
    EXPECT_NEAR(spearman_rho(x, y), spearman_rho(ex, cy), 1e-12);
    EXPECT_NEAR(kendall_tau_b(x, y), kendall_tau_b(ex, cy), 1e-12);
}

TEST(KruskalWallis, HandRankedExample) {
    // Groups {1,2,3} {4,5,6} {7,8,9}: rank sums 6, 15, 24, N=9.
    // H = 12/(9*10) * (36/3 + 225/3 + 576/3) - 3*10 = 7.2
    const auto res = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    EXPECT_NEAR(res.h, 7.2, 1e-12);
    EXPECT_NEAR(res.p_value, std::exp(-7.2 / 2.0), 1e-10);  // chi2 with 2 dof
    EXPECT_NEAR(res.eta_squared, (7.2 - 3 + 1) / (9.0 - 3), 1e-12);
}

TEST(KruskalWallis, TieCorrection) {
    // {1,1,2} {2,3,3}: ranks {1.5,1.5,3.5} {3.5,5.5,5.5}; sums 6.5 and 14.5.
    const double h_raw = 12.0 / (6 * 7) * (6.5 * 6.5 / 3 + 14.5 * 14.5 / 3) - 3 * 7;
    const double correction = 1.0 - (3 * (8 - 2)) / double(6 * 6 * 6 - 6);
    const auto res = kruskal_wallis({{1, 1, 2}, {2, 3, 3}});
    EXPECT_NEAR(res.h, h_raw / correction, 1e-12);
}

TEST(KruskalWallis, AllTiedThrows) {
    try {
        kruskal_wallis({{2, 2}, {2, 2, 2}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AllTied);
    }
}

TEST(Fisher, OddsRatioExamples) {
    // Group A fails 3/10, group B fails 7/10.
    const auto res = fisher_or({3, 7, 7, 3});
    EXPECT_NEAR(res.odds_ratio, 9.0 / 49.0, 1e-12);
    EXPECT_TRUE(res.exact);
    // scipy.stats.fisher_exact([[3,7],[7,3]]) -> p = 0.178950...
    EXPECT_NEAR(res.p_value, 0.1789, 1e-3);
}

TEST(Fisher, ExactPValueMatchesHypergeometricEnumeration) {
    const TwoByTwo t{8, 2, 1, 5};
    const auto res = fisher_or(t);
    // enumerate all tables with the same margins
    const int r1 = 10, c1 = 9, n = 16;
    auto lchoose = [](int a, int b) { return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0); };
    auto prob = [&](int a) { return std::exp(lchoose(r1, a) + lchoose(n - r1, c1 - a) - lchoose(n, c1)); };
    const double observed = prob(8);
    double p = 0;
    for (int a = std::max(0, c1 - (n - r1)); a <= std::min(r1, c1); ++a)
        if (prob(a) <= observed * (1 + 1e-7)) p += prob(a);
    EXPECT_NEAR(res.p_value, p, 1e-12);
    EXPECT_NEAR(res.odds_ratio, 40.0 / 2.0, 1e-12);
}

TEST(Fisher, YmylContrastReproducesPublishedOddsRatio) {
    // 265,448 YMYL citations with 38.3% failing, 496,047 others with 21.1% failing.
    const auto a = static_cast<std::uint64_t>(std::llround(265448 * 0.383));
    const auto c = static_cast<std::uint64_t>(std::llround(496047 * 0.211));
    const auto res = fisher_or({a, 265448 - a, c, 496047 - c});
    EXPECT_NEAR(res.odds_ratio, 2.318, 0.01);
    EXPECT_FALSE(res.exact);
    EXPECT_LT(res.p_value, 1e-100);
}

TEST(Fisher, ZeroCellUsesHaldaneCorrection) {
    const auto res = fisher_or({0, 5, 4, 3});
    EXPECT_TRUE(res.continuity_corrected);
    EXPECT_NEAR(res.odds_ratio, (0.5 * 3.5) / (5.5 * 4.5), 1e-12);
}

TEST(VarianceDecomposition, HandComputed) {
    // provider P: m1 n=10 mean 1, m2 n=10 mean 3 -> mu_P = 2
    // provider Q: m3 n=20 mean 6 -> mu_Q = 6; grand = (20*2 + 20*6)/40 = 4
    std::vector<GroupCell> cells{{"P", "m1", 10, 1}, {"P", "m2", 10, 3}, {"Q", "m3", 20, 6}};
    const auto res = variance_decomposition(cells);
    EXPECT_NEAR(res.between_ss, 20 * 4 + 20 * 4, 1e-12);
    EXPECT_NEAR(res.within_ss, 10 * 1 + 10 * 1, 1e-12);
    EXPECT_NEAR(res.between_pct + res.within_pct, 100.0, 1e-9);
    EXPECT_NEAR(res.between_pct, 100.0 * 160 / 180, 1e-9);
}

TEST(VarianceDecomposition, IdenticalProviderMeansGiveNoBetweenShare) {
    std::vector<GroupCell> cells{{"P", "a", 5, 1}, {"P", "b", 5, 3}, {"Q", "c", 5, 0}, {"Q", "d", 5, 4}};
    const auto res = variance_decomposition(cells);
    EXPECT_NEAR(res.between_pct, 0.0, 1e-12);
    EXPECT_NEAR(res.within_pct, 100.0, 1e-12);
}

TEST(VarianceDecomposition, SimulatedSharedMeanHasSmallBetweenShare) {
    std::mt19937 rng(23);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<GroupCell> cells;
    for (int g = 0; g < 5; ++g)
        for (int m = 0; m < 40; ++m) cells.push_back({"g" + std::to_string(g), std::to_string(m), 100, 3.0 + noise(rng)});
    const auto res = variance_decomposition(cells);
    EXPECT_LT(res.between_pct, 10.0);
}

TEST(VarianceDecomposition, SingleGroupThrows) {
    std::vector<GroupCell> cells{{"P", "a", 5, 1}, {"P", "b", 5, 3}};
    EXPECT_THROW(variance_decomposition(cells), Error);
}

TEST(Special, DistributionSanity) {
    EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-9);
    EXPECT_NEAR(normal_sf(1.959963984540054), 0.025, 1e-12);
    EXPECT_NEAR(f_cdf(f_quantile(0.975, 5, 10), 5, 10), 0.975, 1e-10);
    // F(0.95; 2, 10) = 4.102821
    EXPECT_NEAR(f_quantile(0.95, 2, 10), 4.102821, 1e-5);
}
