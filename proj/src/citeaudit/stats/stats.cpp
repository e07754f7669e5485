#include "citeaudit/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "citeaudit/common/error.hpp"
#include "citeaudit/stats/special.hpp"

namespace citeaudit::stats {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) fail(ErrorCode::InvalidArgument, "sequences differ in length");
}

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

// ---- agreement ----------------------------------------------------------

ConfusionTable ConfusionTable::from_pairs(std::span<const std::string> a, std::span<const std::string> b) {
    require_same_length(a.size(), b.size());
    std::set<std::string> labels(a.begin(), a.end());
    labels.insert(b.begin(), b.end());
    ConfusionTable t;
    t.labels.assign(labels.begin(), labels.end());
    const std::size_t k = t.labels.size();
    t.counts.assign(k * k, 0);
    auto idx = [&](const std::string& s) {
        return static_cast<std::size_t>(std::lower_bound(t.labels.begin(), t.labels.end(), s) - t.labels.begin());
    };
    for (std::size_t i = 0; i < a.size(); ++i) ++t.counts[idx(a[i]) * k + idx(b[i])];
    return t;
}

std::uint64_t ConfusionTable::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double cohen_kappa(const ConfusionTable& table) {
    const std::size_t k = table.labels.size();
    if (table.counts.size() != k * k) fail(ErrorCode::InvalidArgument, "confusion table is not square");
    const double n = static_cast<double>(table.total());
    if (n == 0) fail(ErrorCode::InvalidArgument, "empty confusion table");
    double agree = 0.0;
    double expected = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        agree += static_cast<double>(table.at(i, i));
        double row = 0.0;
        double col = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row += static_cast<double>(table.at(i, j));
            col += static_cast<double>(table.at(j, i));
        }
        expected += (row / n) * (col / n);
    }
    const double p_o = agree / n;
    if (expected >= 1.0 - 1e-15) fail(ErrorCode::DegenerateMarginals, "expected agreement is 1");
    return (p_o - expected) / (1.0 - expected);
}

double cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
    return cohen_kappa(ConfusionTable::from_pairs(a, b));
}

double krippendorff_alpha_nominal(const NominalGrid& grid) {
    // coincidence matrix o[c][k]
    std::map<std::string, std::map<std::string, double>> o;
    for (const auto& unit : grid) {
        std::vector<const std::string*> values;
        for (const auto& v : unit)
            if (v) values.push_back(&*v);
        const std::size_t m = values.size();
        if (m < 2) continue;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (i != j) o[*values[i]][*values[j]] += w;
    }
    std::map<std::string, double> n_c;
    double n = 0.0;
    double observed = 0.0;
    for (const auto& [c, row] : o) {
        for (const auto& [k, v] : row) {
            n_c[c] += v;
            n += v;
            if (c != k) observed += v;
        }
    }
    if (n <= 1.0) fail(ErrorCode::NoVariation, "fewer than two pairable values");
    double expected = 0.0;
    for (const auto& [c, nc] : n_c)
        for (const auto& [k, nk] : n_c)
            if (c != k) expected += nc * nk;
    if (expected <= 0.0) fail(ErrorCode::NoVariation, "expected disagreement is zero");
    return 1.0 - (n - 1.0) * observed / expected;
}

RatingsGrid::RatingsGrid(std::size_t targets, std::size_t raters, std::vector<double> values)
    : targets_(targets), raters_(raters), values_(std::move(values)) {
    if (raters_ < 2) fail(ErrorCode::InsufficientAnnotators, "need at least two raters");
    if (targets_ < 2) fail(ErrorCode::InvalidArgument, "need at least two targets");
    if (values_.size() != targets_ * raters_) fail(ErrorCode::InvalidArgument, "grid size mismatch");
    for (double v : values_)
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "grid must be complete and finite");
}

IccResult icc_2k(const RatingsGrid& grid, double confidence) {
    const std::size_t n = grid.targets();
    const std::size_t k = grid.raters();
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(k);

    const double grand = mean_of(grid.values());
    std::vector<double> row_mean(n, 0.0);
    std::vector<double> col_mean(k, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t r = 0; r < k; ++r) {
            row_mean[t] += grid.at(t, r) / dk;
            col_mean[r] += grid.at(t, r) / dn;
        }
    double ss_rows = 0.0;
    double ss_cols = 0.0;
    double ss_total = 0.0;
    for (double m : row_mean) ss_rows += dk * (m - grand) * (m - grand);
    for (double m : col_mean) ss_cols += dn * (m - grand) * (m - grand);
    for (double v : grid.values()) ss_total += (v - grand) * (v - grand);
    const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

    IccResult res;
    res.targets = n;
    res.raters = k;
    res.ms_rows = ss_rows / (dn - 1.0);
    res.ms_cols = ss_cols / (dk - 1.0);
    res.ms_error = ss_error / ((dn - 1.0) * (dk - 1.0));
    if (res.ms_rows <= 1e-300) fail(ErrorCode::ZeroRowVariance, "targets do not vary");

    const double msr = res.ms_rows;
    const double msc = res.ms_cols;
    const double mse = res.ms_error;
    res.icc = (msr - mse) / (msr + (msc - mse) / dn);
    res.icc_single = (msr - mse) / (msr + (dk - 1.0) * mse + dk * (msc - mse) / dn);

    // McGraw & Wong (1996) bounds for ICC(A,1), stepped up to k raters
    // with Spearman-Brown.
    if (mse <= 1e-300 && msc <= 1e-300) {
        res.ci_low = res.ci_high = 1.0;
        return res;
    }
    const double alpha = 1.0 - confidence;
    const double rho = res.icc_single;
    const double a = dk * rho / (dn * (1.0 - rho));
    const double b = 1.0 + dk * rho * (dn - 1.0) / (dn * (1.0 - rho));
    const double v = std::pow(a * msc + b * mse, 2.0) /
                     (std::pow(a * msc, 2.0) / (dk - 1.0) + std::pow(b * mse, 2.0) / ((dn - 1.0) * (dk - 1.0)));
    const double f_hi = f_quantile(1.0 - alpha / 2.0, dn - 1.0, v);
    const double f_lo = f_quantile(1.0 - alpha / 2.0, v, dn - 1.0);
    const double l1 = dn * (msr - f_hi * mse) / (f_hi * (dk * msc + (dk * dn - dk - dn) * mse) + dn * msr);
    const double u1 = dn * (f_lo * msr - mse) / (dk * msc + (dk * dn - dk - dn) * mse + dn * f_lo * msr);
    res.ci_low = l1 * dk / (1.0 + (dk - 1.0) * l1);
    res.ci_high = u1 * dk / (1.0 + (dk - 1.0) * u1);
    return res;
}

// ---- correlation --------------------------------------------------------

double pearson_r(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    if (x.size() < 2) fail(ErrorCode::InvalidArgument, "need n >= 2");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) fail(ErrorCode::ZeroVariance, "constant input");
    return sxy / std::sqrt(sxx * syy);
}

double concordance_ccc(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    if (x.size() < 2) fail(ErrorCode::InvalidArgument, "need n >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy /= n;
    sxx /= n;
    syy /= n;
    const double denom = sxx + syy + (mx - my) * (mx - my);
    if (denom <= 0.0) fail(ErrorCode::ZeroVariance, "constant, identical inputs");
    return 2.0 * sxy / denom;
}

double mean_absolute_deviation(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    if (x.empty()) fail(ErrorCode::InvalidArgument, "empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    return pearson_r(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    require_same_length(x.size(), y.size());
    const std::size_t n = x.size();
    if (n < 2) fail(ErrorCode::InvalidArgument, "need n >= 2");

    std::vector<std::pair<double, double>> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {x[i], y[i]};
    std::sort(pts.begin(), pts.end());

    auto tied_pairs = [](std::uint64_t run) { return run * (run - 1) / 2; };
    std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::uint64_t ties_x = 0;
    std::uint64_t ties_xy = 0;
    {
        std::uint64_t run_x = 1;
        std::uint64_t run_xy = 1;
        for (std::size_t i = 1; i < n; ++i) {
            if (pts[i].first == pts[i - 1].first) {
                ++run_x;
                if (pts[i].second == pts[i - 1].second) ++run_xy;
                else {
                    ties_xy += tied_pairs(run_xy);
                    run_xy = 1;
                }
            } else {
                ties_x += tied_pairs(run_x);
                ties_xy += tied_pairs(run_xy);
                run_x = run_xy = 1;
            }
        }
        ties_x += tied_pairs(run_x);
        ties_xy += tied_pairs(run_xy);
    }

    // merge sort on y counting exchanges (discordant pairs)
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = pts[i].second;
    std::vector<double> buf(n);
    std::uint64_t swaps = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo < n; lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, n);
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo;
            std::size_t j = mid;
            std::size_t k = lo;
            while (i < mid && j < hi) {
                if (ys[j] < ys[i]) {
                    swaps += mid - i;
                    buf[k++] = ys[j++];
                } else {
                    buf[k++] = ys[i++];
                }
            }
            while (i < mid) buf[k++] = ys[i++];
            while (j < hi) buf[k++] = ys[j++];
        }
        ys.swap(buf);
    }

    std::uint64_t ties_y = 0;
    {
        std::uint64_t run = 1;
        for (std::size_t i = 1; i < n; ++i) {
            if (ys[i] == ys[i - 1]) ++run;
            else {
                ties_y += tied_pairs(run);
                run = 1;
            }
        }
        ties_y += tied_pairs(run);
    }

    const double numer = static_cast<double>(n0) - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
                         static_cast<double>(ties_xy) - 2.0 * static_cast<double>(swaps);
    const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return numer / denom;
}

// ---- tests --------------------------------------------------------------

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail(ErrorCode::InvalidArgument, "need at least two groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) fail(ErrorCode::InvalidArgument, "empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const auto ranks = average_ranks(pooled);
    const double n = static_cast<double>(pooled.size());

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rsum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rsum += ranks[offset + i];
        offset += g.size();
        h += rsum * rsum / static_cast<double>(g.size());
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double correction = 1.0 - tie_sum / (n * n * n - n);
    if (correction <= 0.0) fail(ErrorCode::AllTied, "all observations are tied");
    h /= correction;

    KruskalWallisResult res;
    res.h = h;
    res.n = pooled.size();
    res.groups = groups.size();
    const double k = static_cast<double>(groups.size());
    res.p_value = chi_square_sf(h, k - 1.0);
    res.eta_squared = n > k ? (h - k + 1.0) / (n - k) : std::numeric_limits<double>::quiet_NaN();
    return res;
}

FisherResult fisher_or(const TwoByTwo& t, std::uint64_t exact_limit) {
    FisherResult res;
    double a = static_cast<double>(t.a);
    double b = static_cast<double>(t.b);
    double c = static_cast<double>(t.c);
    double d = static_cast<double>(t.d);
    if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
        res.continuity_corrected = true;
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
    }
    res.odds_ratio = (a * d) / (b * c);

    const std::uint64_t total = t.a + t.b + t.c + t.d;
    if (total <= exact_limit) {
        res.exact = true;
        const std::uint64_t row1 = t.a + t.b;
        const std::uint64_t col1 = t.a + t.c;
        const std::uint64_t row2 = t.c + t.d;
        auto log_choose = [](double nn, double kk) {
            return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
        };
        const double denom = log_choose(static_cast<double>(total), static_cast<double>(col1));
        auto log_pmf = [&](std::uint64_t x) {
            return log_choose(static_cast<double>(row1), static_cast<double>(x)) +
                   log_choose(static_cast<double>(row2), static_cast<double>(col1 - x)) - denom;
        };
        const std::uint64_t lo = col1 > row2 ? col1 - row2 : 0;
        const std::uint64_t hi = std::min(row1, col1);
        const double p_obs = std::exp(log_pmf(t.a));
        double p = 0.0;
        for (std::uint64_t x = lo; x <= hi; ++x) {
            const double px = std::exp(log_pmf(x));
            if (px <= p_obs * (1.0 + 1e-7)) p += px;
        }
        res.p_value = std::min(1.0, p);
    } else {
        res.exact = false;
        const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
        const double z = std::fabs(std::log(res.odds_ratio)) / se;
        res.p_value = std::min(1.0, 2.0 * normal_sf(z));
    }
    return res;
}

VarianceDecomposition variance_decomposition(std::span<const GroupCell> cells, bool weighted) {
    std::map<std::string, std::pair<double, double>> groups;  // weight, weighted sum
    double total_w = 0.0;
    double total_sum = 0.0;
    for (const auto& cell : cells) {
        if (cell.n <= 0.0) fail(ErrorCode::InvalidArgument, "group cell with no observations");
        const double w = weighted ? cell.n : 1.0;
        groups[cell.group].first += w;
        groups[cell.group].second += w * cell.mean;
        total_w += w;
        total_sum += w * cell.mean;
    }
    if (groups.size() < 2) fail(ErrorCode::SingleGroup, "need at least two providers");
    const double mu = total_sum / total_w;

    VarianceDecomposition res;
    for (const auto& [name, ws] : groups) {
        const double mu_g = ws.second / ws.first;
        res.between_ss += ws.first * (mu_g - mu) * (mu_g - mu);
    }
    for (const auto& cell : cells) {
        const auto& ws = groups[cell.group];
        const double mu_g = ws.second / ws.first;
        const double w = weighted ? cell.n : 1.0;
        res.within_ss += w * (cell.mean - mu_g) * (cell.mean - mu_g);
    }
    const double sum = res.between_ss + res.within_ss;
    if (sum > 0.0) {
        res.between_pct = 100.0 * res.between_ss / sum;
        res.within_pct = 100.0 * res.within_ss / sum;
    }
    return res;
}

}  // namespace citeaudit::stats
