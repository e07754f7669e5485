#include "citeaudit/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <unordered_map>

#include "citeaudit/common/error.hpp"

namespace citeaudit::metrics {

void validate(const Thresholds& t) {
    for (int v : {t.ipa, t.asf, t.ss})
        if (v < 1 || v > 3)
            fail(ErrorCode::ConfigInvalid, "failure threshold must be in 1..3, got " + std::to_string(v));
}

CitationScores apply_thresholds(int ipa, int ss, int asf, const Thresholds& t) {
    CitationScores s;
    s.ipa = ipa;
    s.ss = ss;
    s.asf = asf;
    s.fail_ipa = ipa <= t.ipa;
    s.fail_ss = ss <= t.ss;
    s.fail_asf = asf <= t.asf;
    s.critvm = s.fail_ipa && s.fail_ss && s.fail_asf;
    return s;
}

CitationScores score_citation(const CitationLabels& l, const Thresholds& t) {
    return apply_thresholds(taxonomy::ipa_score(l.qi, l.sp), taxonomy::ss_score(l.sd, l.st),
                            taxonomy::asf_score(l.asf), t);
}

CitationScores score_citation(const CitationLabels& l, const Thresholds& t, const taxonomy::MatrixSet& m) {
    return apply_thresholds(m.ipa_score(l.qi, l.sp), m.ss_score(l.sd, l.st), taxonomy::asf_score(l.asf), t);
}

ResponseAggregate aggregate_response(std::span<const CitationScores> scores) {
    if (scores.empty()) fail(ErrorCode::EmptyResponse, "response has no evaluable citations");
    ResponseAggregate r;
    r.n = scores.size();
    std::size_t fa = 0, fs = 0, ff = 0;
    double si = 0, ss = 0, sa = 0;
    for (const auto& s : scores) {
        si += s.ipa;
        ss += s.ss;
        sa += s.asf;
        fa += s.fail_ipa;
        fs += s.fail_ss;
        ff += s.fail_asf;
    }
    const double n = static_cast<double>(r.n);
    r.r_ipa = si / n;
    r.r_ss = ss / n;
    r.r_asf = sa / n;
    r.afr = double(fa) / n;
    r.sfr = double(fs) / n;
    r.ffr = double(ff) / n;
    r.r_afr = fa > 0;
    r.r_sfr = fs > 0;
    r.r_ffr = ff > 0;
    r.any_exposure = r.r_afr || r.r_sfr || r.r_ffr;
    return r;
}

namespace {

using ResponseKey = std::pair<std::string, std::string>;

struct KeyHash {
    std::size_t operator()(const ResponseKey& k) const noexcept {
        return std::hash<std::string>{}(k.first) * 31 ^ std::hash<std::string>{}(k.second);
    }
};

// Response groups keyed by (query_id, model), sorted by key.
std::vector<std::pair<ResponseKey, std::vector<std::size_t>>> group_responses(std::span<const ScoredCitation> pool) {
    std::unordered_map<ResponseKey, std::size_t, KeyHash> slot;
    std::vector<std::pair<ResponseKey, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        ResponseKey key{pool[i].query_id, pool[i].model};
        auto [it, inserted] = slot.try_emplace(key, groups.size());
        if (inserted) groups.push_back({key, {}});
        groups[it->second].second.push_back(i);
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return groups;
}

}  // namespace

std::vector<ResponseAggregate> aggregate_responses(std::span<const ScoredCitation> pool, const Thresholds& t) {
    std::vector<ResponseAggregate> out;
    std::vector<CitationScores> buf;
    for (const auto& [key, idx] : group_responses(pool)) {
        buf.clear();
        for (std::size_t i : idx) buf.push_back(apply_thresholds(pool[i].ipa, pool[i].ss, pool[i].asf, t));
        auto agg = aggregate_response(buf);
        agg.query_id = key.first;
        agg.model = key.second;
        agg.provider = pool[idx.front()].provider;
        out.push_back(std::move(agg));
    }
    return out;
}

void FailureCounts::add(const CitationScores& s) {
    ++n;
    fail_ipa += s.fail_ipa;
    fail_ss += s.fail_ss;
    fail_asf += s.fail_asf;
    critvm += s.critvm;
    sum_ipa += s.ipa;
    sum_ss += s.ss;
    sum_asf += s.asf;
}

void ExposureCounts::add(const ResponseAggregate& r) {
    ++responses;
    citations += r.n;
    r_afr += r.r_afr;
    r_sfr += r.r_sfr;
    r_ffr += r.r_ffr;
    any += r.any_exposure;
}

std::size_t density_bin_index(std::size_t n, std::span<const std::size_t> edges) noexcept {
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (n <= edges[i]) return i;
    return edges.size();
}

std::string density_bin_label(std::size_t index, std::span<const std::size_t> edges) {
    if (index >= edges.size()) return std::to_string(edges.empty() ? 0 : edges.back()) + "+";
    const std::size_t lo = index == 0 ? 1 : edges[index - 1] + 1;
    return std::to_string(lo) + "-" + std::to_string(edges[index]);
}

PoolReport pool_report(std::span<const ScoredCitation> pool, const PoolOptions& options) {
    validate(options.thresholds);
    for (std::size_t i = 0; i < options.density_edges.size(); ++i)
        if (options.density_edges[i] == 0 || (i > 0 && options.density_edges[i] <= options.density_edges[i - 1]))
            fail(ErrorCode::ConfigInvalid, "density bin edges must be positive and strictly increasing");

    PoolReport rep;
    rep.thresholds = options.thresholds;
    const auto& t = options.thresholds;

    std::map<std::string, GroupRow> models;
    std::map<std::string, GroupRow> providers;
    for (const auto& c : pool) {
        const auto s = apply_thresholds(c.ipa, c.ss, c.asf, t);
        rep.overall.add(s);
        (taxonomy::is_ymyl(c.sd) ? rep.ymyl.ymyl : rep.ymyl.non_ymyl).add(s);

        const int mask = (s.fail_ipa ? 1 : 0) | (s.fail_ss ? 2 : 0) | (s.fail_asf ? 4 : 0);
        switch (mask) {
            case 1: ++rep.venn.ipa_only; break;
            case 2: ++rep.venn.ss_only; break;
            case 4: ++rep.venn.asf_only; break;
            case 3: ++rep.venn.ipa_ss; break;
            case 5: ++rep.venn.ipa_asf; break;
            case 6: ++rep.venn.ss_asf; break;
            case 7: ++rep.venn.all_three; break;
            default: break;
        }

        auto& m = models[c.model];
        m.key = c.model;
        m.provider = c.provider;
        m.citations.add(s);
        auto& p = providers[c.provider];
        p.key = c.provider;
        p.citations.add(s);
    }
    rep.expected_critvm_rate = rep.overall.afr() * rep.overall.sfr() * rep.overall.ffr();

    const auto& y = rep.ymyl;
    rep.ymyl.table = {y.ymyl.fail_ss, y.ymyl.n - y.ymyl.fail_ss, y.non_ymyl.fail_ss, y.non_ymyl.n - y.non_ymyl.fail_ss};
    if (y.ymyl.n > 0 && y.non_ymyl.n > 0) rep.ymyl.fisher = stats::fisher_or(rep.ymyl.table);

    const auto& edges = options.density_edges;
    rep.density.resize(edges.size() + 1);
    for (std::size_t i = 0; i < rep.density.size(); ++i) {
        auto& bin = rep.density[i];
        bin.label = density_bin_label(i, edges);
        bin.lo = i == 0 ? 1 : edges[i - 1] + 1;
        if (i < edges.size()) bin.hi = edges[i];
    }

    std::vector<CitationScores> buf;
    for (const auto& [key, idx] : group_responses(pool)) {
        buf.clear();
        for (std::size_t i : idx) buf.push_back(apply_thresholds(pool[i].ipa, pool[i].ss, pool[i].asf, t));
        const auto agg = aggregate_response(buf);
        rep.exposure.add(agg);
        models[key.second].responses.add(agg);
        providers[pool[idx.front()].provider].responses.add(agg);
        auto& bin = rep.density[density_bin_index(agg.n, edges)];
        bin.responses.add(agg);
        for (const auto& s : buf) bin.citations.add(s);
    }

    for (auto& [k, row] : models) rep.by_model.push_back(std::move(row));
    for (auto& [k, row] : providers) rep.by_provider.push_back(std::move(row));
    return rep;
}

std::vector<ThresholdVariant> default_threshold_variants() {
    return {
        {"baseline", {2, 2, 2}},  {"as_loose", {2, 3, 2}}, {"as_strict", {2, 1, 2}},  {"ipa_loose", {3, 2, 2}},
        {"ss_loose", {2, 2, 3}},  {"ss_strict", {2, 2, 1}}, {"ipa_strict", {1, 2, 2}},
    };
}

namespace {

struct RateTable {
    std::vector<std::string> keys;
    std::vector<double> rates;
    std::vector<std::string> ranking;
};

RateTable rank_by_rate(const std::map<std::string, std::pair<std::uint64_t, std::uint64_t>>& counts) {
    RateTable t;
    for (const auto& [k, c] : counts) {
        t.keys.push_back(k);
        t.rates.push_back(c.second ? double(c.first) / double(c.second) : 0.0);
    }
    std::vector<std::size_t> order(t.keys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t.rates[a] < t.rates[b]; });
    for (std::size_t i : order) t.ranking.push_back(t.keys[i]);
    return t;
}

double tau_between(const RateTable& base, const RateTable& other) {
    // Both tables iterate the same sorted key set, so rates align index-wise.
    if (base.rates.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return stats::kendall_tau_b(base.rates, other.rates);
}

}  // namespace

std::vector<VariantResult> threshold_sensitivity(std::span<const ScoredCitation> pool,
                                                 std::span<const ThresholdVariant> variants) {
    const Thresholds reference{2, 2, 2};
    auto ref_it = std::find_if(variants.begin(), variants.end(),
                               [&](const ThresholdVariant& v) { return v.thresholds == reference; });
    if (ref_it == variants.end()) fail(ErrorCode::InvalidArgument, "variant list must include the (2,2,2) baseline");

    using Counts = std::map<std::string, std::pair<std::uint64_t, std::uint64_t>>;
    auto tables_for = [&](const Thresholds& t, std::uint64_t& total) {
        Counts by_model, by_cat;
        total = 0;
        for (const auto& c : pool) {
            const bool crit = c.ipa <= t.ipa && c.ss <= t.ss && c.asf <= t.asf;
            total += crit;
            auto& m = by_model[c.model];
            m.first += crit;
            ++m.second;
            auto& k = by_cat[c.category];
            k.first += crit;
            ++k.second;
        }
        return std::make_pair(rank_by_rate(by_model), rank_by_rate(by_cat));
    };

    std::uint64_t ref_total = 0;
    for (const auto& v : variants) validate(v.thresholds);
    const auto [ref_model, ref_cat] = tables_for(ref_it->thresholds, ref_total);

    std::vector<VariantResult> out;
    for (const auto& v : variants) {
        VariantResult r;
        r.variant = v;
        const auto [model_t, cat_t] = tables_for(v.thresholds, r.critvm);
        r.critvm_rate = pool.empty() ? 0.0 : double(r.critvm) / double(pool.size());
        r.model_ranking = model_t.ranking;
        r.category_ranking = cat_t.ranking;
        r.tau_model = tau_between(ref_model, model_t);
        r.tau_category = tau_between(ref_cat, cat_t);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace citeaudit::metrics
