#include "citeaudit/io/replay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"
#include "citeaudit/io/delimited.hpp"

namespace citeaudit::io {

using nlohmann::ordered_json;

namespace {

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string pct(double fraction) { return text::format_fixed(100.0 * fraction, 2); }
std::string fixed(double v, int d = 4) { return std::isfinite(v) ? text::format_fixed(v, d) : "NA"; }

ordered_json thresholds_json(const metrics::Thresholds& t) { return {{"ipa", t.ipa}, {"asf", t.asf}, {"ss", t.ss}}; }

ordered_json counts_json(const metrics::FailureCounts& c) {
    return {{"n", c.n},
            {"fail_ipa", c.fail_ipa},
            {"fail_ss", c.fail_ss},
            {"fail_asf", c.fail_asf},
            {"critvm", c.critvm},
            {"afr", num(c.afr())},
            {"sfr", num(c.sfr())},
            {"ffr", num(c.ffr())},
            {"critvm_rate", num(c.critvm_rate())},
            {"mean_ipa", num(c.mean_ipa())},
            {"mean_ss", num(c.mean_ss())},
            {"mean_asf", num(c.mean_asf())}};
}

ordered_json exposure_json(const metrics::ExposureCounts& e) {
    return {{"responses", e.responses},
            {"citations", e.citations},
            {"mean_citations", num(e.mean_n())},
            {"r_afr", e.r_afr},
            {"r_sfr", e.r_sfr},
            {"r_ffr", e.r_ffr},
            {"any", e.any},
            {"r_afr_share", num(e.share(e.r_afr))},
            {"r_sfr_share", num(e.share(e.r_sfr))},
            {"r_ffr_share", num(e.share(e.r_ffr))},
            {"any_share", num(e.share(e.any))}};
}

ordered_json group_json(const metrics::GroupRow& g) {
    ordered_json j{{"key", g.key}};
    if (!g.provider.empty()) j["provider"] = g.provider;
    j["citations"] = counts_json(g.citations);
    j["responses"] = exposure_json(g.responses);
    return j;
}

ordered_json response_json(const metrics::ResponseAggregate& r) {
    return {{"query_id", r.query_id}, {"model", r.model},  {"provider", r.provider}, {"n", r.n},
            {"r_ipa", num(r.r_ipa)},  {"r_ss", num(r.r_ss)}, {"r_asf", num(r.r_asf)},  {"afr", num(r.afr)},
            {"sfr", num(r.sfr)},      {"ffr", num(r.ffr)},   {"r_afr", r.r_afr},       {"r_sfr", r.r_sfr},
            {"r_ffr", r.r_ffr},       {"any_exposure", r.any_exposure}};
}

ordered_json kw_json(const std::optional<stats::KruskalWallisResult>& k) {
    if (!k) return nullptr;
    return {{"h", num(k->h)},
            {"p_value", num(k->p_value)},
            {"eta_squared", num(k->eta_squared)},
            {"n", k->n},
            {"groups", k->groups}};
}

std::optional<stats::KruskalWallisResult> kruskal_by(std::span<const metrics::ScoredCitation> pool,
                                                     const std::vector<double>& values,
                                                     std::string metrics::ScoredCitation::*key) {
    std::map<std::string, std::vector<double>> groups;
    for (std::size_t i = 0; i < pool.size(); ++i) groups[pool[i].*key].push_back(values[i]);
    if (groups.size() < 2) return std::nullopt;
    std::vector<std::vector<double>> g;
    for (auto& [k, v] : groups) g.push_back(std::move(v));
    try {
        return stats::kruskal_wallis(g);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::string table_text(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    write_row(out, header, '\t');
    for (const auto& r : rows) write_row(out, r, '\t');
    return out.str();
}

std::vector<std::string> group_cells(const metrics::GroupRow& g) {
    const auto& c = g.citations;
    const auto& e = g.responses;
    return {g.key,
            g.provider,
            std::to_string(c.n),
            pct(c.afr()),
            pct(c.sfr()),
            pct(c.ffr()),
            std::to_string(c.critvm),
            pct(c.critvm_rate()),
            fixed(c.mean_ipa()),
            fixed(c.mean_ss()),
            fixed(c.mean_asf()),
            std::to_string(e.responses),
            fixed(e.mean_n(), 2),
            pct(e.share(e.r_afr)),
            pct(e.share(e.r_sfr)),
            pct(e.share(e.r_ffr)),
            pct(e.share(e.any))};
}

const std::vector<std::string> kGroupHeader{"key",      "provider", "n",        "afr_pct",  "sfr_pct",  "ffr_pct",
                                            "critvm",   "critvm_pct", "mean_ipa", "mean_ss", "mean_asf", "responses",
                                            "mean_citations", "r_afr_pct", "r_sfr_pct", "r_ffr_pct", "any_pct"};

std::vector<std::filesystem::path> write_tables(const std::filesystem::path& dir,
                                                const std::vector<std::pair<std::string, std::string>>& tables) {
    std::vector<std::filesystem::path> out;
    for (const auto& [name, body] : tables) {
        const auto p = dir / "tables" / name;
        write_file(p, body);
        out.push_back(p);
    }
    return out;
}

}  // namespace

std::vector<metrics::ScoredCitation> score_records(std::span<const MasterRecord> records,
                                                   const taxonomy::MatrixSet& matrices) {
    std::vector<metrics::ScoredCitation> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(to_scored(r, matrices));
    return out;
}

AggregateReport compute_aggregate(std::span<const metrics::ScoredCitation> pool, const ReplayOptions& options) {
    if (pool.empty()) fail(ErrorCode::InvalidArgument, "aggregate needs at least one citation");
    AggregateReport rep;
    metrics::PoolOptions po;
    po.thresholds = options.thresholds;
    po.density_edges = options.density_edges;
    rep.pool = metrics::pool_report(pool, po);
    rep.responses = metrics::aggregate_responses(pool, options.thresholds);

    std::map<std::string, metrics::GroupRow> cats;
    std::map<std::string, std::string> category_of_query;
    for (const auto& c : pool) {
        auto& row = cats[c.category];
        row.key = c.category;
        row.citations.add(metrics::apply_thresholds(c.ipa, c.ss, c.asf, options.thresholds));
        category_of_query.emplace(c.query_id, c.category);
    }
    for (const auto& r : rep.responses) cats[category_of_query[r.query_id]].responses.add(r);
    for (auto& [k, row] : cats) rep.by_category.push_back(std::move(row));

    if (!options.variants.empty()) rep.sensitivity = metrics::threshold_sensitivity(pool, options.variants);
    return rep;
}

StatsReport compute_stats(std::span<const metrics::ScoredCitation> pool, const ReplayOptions& options) {
    if (pool.empty()) fail(ErrorCode::InvalidArgument, "stats need at least one citation");
    StatsReport rep;
    const auto& t = options.thresholds;
    struct Dim {
        const char* name;
        int metrics::ScoredCitation::*score;
        int threshold;
    };
    const Dim dims[] = {{"ASF", &metrics::ScoredCitation::asf, t.asf},
                        {"SS", &metrics::ScoredCitation::ss, t.ss},
                        {"IPA", &metrics::ScoredCitation::ipa, t.ipa}};
    const double n = static_cast<double>(pool.size());
    for (const auto& d : dims) {
        std::vector<double> v;
        v.reserve(pool.size());
        double sum = 0.0, fails = 0.0;
        for (const auto& c : pool) {
            v.push_back(c.*d.score);
            sum += c.*d.score;
            fails += (c.*d.score <= d.threshold) ? 1.0 : 0.0;
        }
        DimensionSummary s;
        s.dimension = d.name;
        s.mean = sum / n;
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = pool.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        s.failure_rate = fails / n;
        s.by_model = kruskal_by(pool, v, &metrics::ScoredCitation::model);
        s.by_category = kruskal_by(pool, v, &metrics::ScoredCitation::category);
        rep.dimensions.push_back(std::move(s));

        std::map<std::pair<std::string, std::string>, std::pair<double, double>> cells;  // (provider, model) -> (n, sum)
        for (const auto& c : pool) {
            auto& cell = cells[{c.provider, c.model}];
            cell.first += 1.0;
            cell.second += c.*d.score;
        }
        std::vector<stats::GroupCell> gc;
        for (const auto& [key, ns] : cells) gc.push_back({key.first, key.second, ns.first, ns.second / ns.first});
        VarianceRow vr;
        vr.dimension = d.name;
        try {
            vr.decomposition = stats::variance_decomposition(gc, options.weighted_variance);
        } catch (const Error&) {
        }
        rep.variance.push_back(std::move(vr));
    }

    std::map<std::string, SourceTypeRow> models;
    std::map<std::string, std::uint64_t> ss_fail;
    for (const auto& c : pool) {
        auto& row = models[c.model];
        row.model = c.model;
        row.provider = c.provider;
        ++row.n;
        row.shares[taxonomy::index_of(c.st)] += 1.0;
        if (c.ss <= t.ss) ++ss_fail[c.model];
    }
    std::vector<double> official, sfr;
    for (auto& [k, row] : models) {
        for (auto& s : row.shares) s /= static_cast<double>(row.n);
        row.sfr = static_cast<double>(ss_fail[k]) / static_cast<double>(row.n);
        official.push_back(row.shares[0]);
        sfr.push_back(row.sfr);
        rep.source_types.push_back(row);
    }
    std::stable_sort(rep.source_types.begin(), rep.source_types.end(),
                     [](const SourceTypeRow& a, const SourceTypeRow& b) { return a.sfr < b.sfr; });
    if (official.size() >= 2) {
        try {
            rep.official_share_vs_sfr_rho = stats::spearman_rho(official, sfr);
        } catch (const Error&) {
        }
    }
    return rep;
}

ReplayReport replay(std::span<const MasterRecord> records, const ReplayOptions& options) {
    if (records.empty()) fail(ErrorCode::InvalidArgument, "replay needs at least one record");
    const auto pool = score_records(records, options.matrices);
    ReplayReport rep;
    rep.citations = pool.size();
    rep.aggregate = compute_aggregate(pool, options);
    rep.stats = compute_stats(pool, options);
    return rep;
}

ordered_json to_json(const AggregateReport& r) {
    const auto& p = r.pool;
    const double n = static_cast<double>(p.overall.n);
    auto share = [&](std::uint64_t k) { return num(n > 0 ? static_cast<double>(k) / n : 0.0); };
    const auto& v = p.venn;
    ordered_json venn{{"ipa_only", v.ipa_only},          {"ss_only", v.ss_only},
                      {"asf_only", v.asf_only},          {"ipa_ss", v.ipa_ss},
                      {"ipa_asf", v.ipa_asf},            {"ss_asf", v.ss_asf},
                      {"all_three", v.all_three},        {"union", v.union_count()},
                      {"ipa_only_share", share(v.ipa_only)}, {"ss_only_share", share(v.ss_only)},
                      {"asf_only_share", share(v.asf_only)}, {"all_three_share", share(v.all_three)},
                      {"union_share", share(v.union_count())}};
    const auto& y = p.ymyl;
    ordered_json ymyl{{"ymyl", counts_json(y.ymyl)},
                      {"non_ymyl", counts_json(y.non_ymyl)},
                      {"table", {{"ymyl_fail", y.table.a}, {"ymyl_pass", y.table.b},
                                 {"non_ymyl_fail", y.table.c}, {"non_ymyl_pass", y.table.d}}},
                      {"odds_ratio", num(y.fisher.odds_ratio)},
                      {"p_value", num(y.fisher.p_value)},
                      {"p_method", y.fisher.exact ? "exact" : "normal_approximation"},
                      {"continuity_corrected", y.fisher.continuity_corrected}};
    ordered_json density = ordered_json::array();
    for (const auto& b : p.density) {
        ordered_json bj{{"label", b.label}, {"lo", b.lo}};
        bj["hi"] = b.hi ? ordered_json(*b.hi) : ordered_json(nullptr);
        bj["citations"] = counts_json(b.citations);
        bj["responses"] = exposure_json(b.responses);
        density.push_back(std::move(bj));
    }
    ordered_json models = ordered_json::array(), providers = ordered_json::array(), cats = ordered_json::array();
    for (const auto& g : p.by_model) models.push_back(group_json(g));
    for (const auto& g : p.by_provider) providers.push_back(group_json(g));
    for (const auto& g : r.by_category) cats.push_back(group_json(g));
    ordered_json variants = ordered_json::array();
    for (const auto& s : r.sensitivity)
        variants.push_back({{"name", s.variant.name},
                            {"thresholds", thresholds_json(s.variant.thresholds)},
                            {"critvm", s.critvm},
                            {"critvm_rate", num(s.critvm_rate)},
                            {"tau_model", num(s.tau_model)},
                            {"tau_category", num(s.tau_category)},
                            {"model_ranking", s.model_ranking},
                            {"category_ranking", s.category_ranking}});
    ordered_json j{{"thresholds", thresholds_json(p.thresholds)},
                   {"pool", counts_json(p.overall)},
                   {"expected_critvm_rate", num(p.expected_critvm_rate)},
                   {"venn", venn},
                   {"ymyl", ymyl},
                   {"exposure", exposure_json(p.exposure)}};
    j["zero_citation_responses"] =
        r.zero_citation_responses ? ordered_json(*r.zero_citation_responses) : ordered_json(nullptr);
    j["density"] = density;
    j["by_model"] = models;
    j["by_provider"] = providers;
    j["by_category"] = cats;
    j["threshold_sensitivity"] = variants;
    return j;
}

ordered_json to_json(const StatsReport& r) {
    ordered_json dims = ordered_json::array();
    for (const auto& d : r.dimensions)
        dims.push_back({{"dimension", d.dimension},
                        {"mean", num(d.mean)},
                        {"sd", num(d.sd)},
                        {"failure_rate", num(d.failure_rate)},
                        {"kruskal_model", kw_json(d.by_model)},
                        {"kruskal_category", kw_json(d.by_category)}});
    ordered_json var = ordered_json::array();
    for (const auto& v : r.variance) {
        ordered_json vj{{"dimension", v.dimension}};
        if (v.decomposition) {
            vj["between_ss"] = num(v.decomposition->between_ss);
            vj["between_pct"] = num(v.decomposition->between_pct);
            vj["within_ss"] = num(v.decomposition->within_ss);
            vj["within_pct"] = num(v.decomposition->within_pct);
        } else {
            vj["between_ss"] = nullptr;
        }
        var.push_back(std::move(vj));
    }
    ordered_json st = ordered_json::array();
    for (const auto& s : r.source_types) {
        ordered_json shares = ordered_json::object();
        for (std::size_t k = 0; k < 6; ++k) shares["ST" + std::to_string(k + 1)] = num(s.shares[k]);
        st.push_back({{"model", s.model}, {"provider", s.provider}, {"n", s.n}, {"shares", shares}, {"sfr", num(s.sfr)}});
    }
    ordered_json j{{"dimensions", dims}, {"variance", var}, {"source_type_by_model", st}};
    j["official_share_vs_sfr_spearman"] =
        r.official_share_vs_sfr_rho ? num(*r.official_share_vs_sfr_rho) : ordered_json(nullptr);
    return j;
}

ordered_json to_json(const ReplayReport& r) {
    return {{"citations", r.citations}, {"aggregate", to_json(r.aggregate)}, {"stats", to_json(r.stats)}};
}

std::vector<std::pair<std::string, std::string>> aggregate_tables(const AggregateReport& r) {
    const auto& p = r.pool;
    const auto& o = p.overall;
    const double n = static_cast<double>(o.n);
    auto share = [&](std::uint64_t k) { return pct(n > 0 ? static_cast<double>(k) / n : 0.0); };
    const auto& y = p.ymyl;
    std::vector<std::vector<std::string>> pool_rows{
        {"citations", std::to_string(o.n)},
        {"afr_pct", pct(o.afr())},
        {"sfr_pct", pct(o.sfr())},
        {"ffr_pct", pct(o.ffr())},
        {"critvm", std::to_string(o.critvm)},
        {"critvm_pct", pct(o.critvm_rate())},
        {"expected_critvm_pct", pct(p.expected_critvm_rate)},
        {"venn_ipa_only_pct", share(p.venn.ipa_only)},
        {"venn_ss_only_pct", share(p.venn.ss_only)},
        {"venn_asf_only_pct", share(p.venn.asf_only)},
        {"venn_ipa_ss_pct", share(p.venn.ipa_ss)},
        {"venn_ipa_asf_pct", share(p.venn.ipa_asf)},
        {"venn_ss_asf_pct", share(p.venn.ss_asf)},
        {"venn_all_three_pct", share(p.venn.all_three)},
        {"ymyl_n", std::to_string(y.ymyl.n)},
        {"ymyl_sfr_pct", pct(y.ymyl.sfr())},
        {"ymyl_mean_ss", fixed(y.ymyl.mean_ss(), 3)},
        {"non_ymyl_n", std::to_string(y.non_ymyl.n)},
        {"non_ymyl_sfr_pct", pct(y.non_ymyl.sfr())},
        {"non_ymyl_mean_ss", fixed(y.non_ymyl.mean_ss(), 3)},
        {"ymyl_odds_ratio", fixed(y.fisher.odds_ratio, 3)},
        {"responses", std::to_string(p.exposure.responses)},
        {"r_afr_pct", pct(p.exposure.share(p.exposure.r_afr))},
        {"r_sfr_pct", pct(p.exposure.share(p.exposure.r_sfr))},
        {"r_ffr_pct", pct(p.exposure.share(p.exposure.r_ffr))},
        {"any_exposure_pct", pct(p.exposure.share(p.exposure.any))},
        {"zero_citation_responses",
         r.zero_citation_responses ? std::to_string(*r.zero_citation_responses) : std::string("NA")}};

    std::vector<std::vector<std::string>> models, providers, cats, density, variants;
    for (const auto& g : p.by_model) models.push_back(group_cells(g));
    for (const auto& g : p.by_provider) providers.push_back(group_cells(g));
    for (const auto& g : r.by_category) cats.push_back(group_cells(g));
    for (const auto& b : p.density) {
        const auto& c = b.citations;
        const auto& e = b.responses;
        density.push_back({b.label, std::to_string(e.responses), std::to_string(c.n), pct(c.afr()), pct(c.sfr()),
                           pct(c.ffr()), pct(e.share(e.r_afr)), pct(e.share(e.r_sfr)), pct(e.share(e.r_ffr)),
                           pct(e.share(e.any))});
    }
    for (const auto& s : r.sensitivity)
        variants.push_back({s.variant.name, std::to_string(s.variant.thresholds.ipa),
                            std::to_string(s.variant.thresholds.asf), std::to_string(s.variant.thresholds.ss),
                            std::to_string(s.critvm), pct(s.critvm_rate), fixed(s.tau_model, 3),
                            fixed(s.tau_category, 3)});
    return {
        {"pool.tsv", table_text({"metric", "value"}, pool_rows)},
        {"models.tsv", table_text(kGroupHeader, models)},
        {"providers.tsv", table_text(kGroupHeader, providers)},
        {"categories.tsv", table_text(kGroupHeader, cats)},
        {"density.tsv", table_text({"bin", "responses", "citations", "afr_pct", "sfr_pct", "ffr_pct", "r_afr_pct",
                                    "r_sfr_pct", "r_ffr_pct", "any_pct"},
                                   density)},
        {"thresholds.tsv", table_text({"variant", "ipa", "asf", "ss", "critvm", "critvm_pct", "tau_model",
                                       "tau_category"},
                                      variants)},
    };
}

std::vector<std::pair<std::string, std::string>> stats_tables(const StatsReport& r) {
    std::vector<std::vector<std::string>> dims, var, st;
    auto eta = [](const std::optional<stats::KruskalWallisResult>& k) {
        return k ? fixed(k->eta_squared, 4) : std::string("NA");
    };
    for (const auto& d : r.dimensions)
        dims.push_back({d.dimension, fixed(d.mean, 3), fixed(d.sd, 3), pct(d.failure_rate), eta(d.by_model),
                        eta(d.by_category)});
    for (const auto& v : r.variance) {
        if (v.decomposition)
            var.push_back({v.dimension, fixed(v.decomposition->between_ss, 1), fixed(v.decomposition->between_pct, 1),
                           fixed(v.decomposition->within_ss, 1), fixed(v.decomposition->within_pct, 1)});
        else
            var.push_back({v.dimension, "NA", "NA", "NA", "NA"});
    }
    for (const auto& s : r.source_types) {
        std::vector<std::string> row{s.model, s.provider, std::to_string(s.n)};
        for (double x : s.shares) row.push_back(pct(x));
        row.push_back(pct(s.sfr));
        st.push_back(std::move(row));
    }
    st.push_back({"spearman_official_vs_sfr", "", "", r.official_share_vs_sfr_rho ? fixed(*r.official_share_vs_sfr_rho, 3)
                                                                               : std::string("NA"),
                  "", "", "", "", "", ""});
    return {
        {"dimensions.tsv", table_text({"dimension", "mean", "sd", "failure_pct", "model_eta2", "category_eta2"}, dims)},
        {"variance.tsv", table_text({"dimension", "between_ss", "between_pct", "within_ss", "within_pct"}, var)},
        {"source_types.tsv", table_text({"model", "provider", "n", "ST1_pct", "ST2_pct", "ST3_pct", "ST4_pct", "ST5_pct",
                                         "ST6_pct", "sfr_pct"},
                                        st)},
    };
}

std::vector<std::filesystem::path> write_aggregate_bundle(const std::filesystem::path& dir, const AggregateReport& r) {
    auto out = write_tables(dir, aggregate_tables(r));
    write_file(dir / "aggregate.json", to_json(r).dump(2) + "\n");
    out.push_back(dir / "aggregate.json");
    std::string lines;
    for (const auto& a : r.responses) {
        lines += response_json(a).dump();
        lines += '\n';
    }
    write_file(dir / "responses.jsonl", lines);
    out.push_back(dir / "responses.jsonl");
    return out;
}

std::vector<std::filesystem::path> write_stats_bundle(const std::filesystem::path& dir, const StatsReport& r) {
    auto out = write_tables(dir, stats_tables(r));
    write_file(dir / "stats.json", to_json(r).dump(2) + "\n");
    out.push_back(dir / "stats.json");
    return out;
}

std::vector<std::filesystem::path> write_replay_bundle(const std::filesystem::path& dir, const ReplayReport& r) {
    auto out = write_aggregate_bundle(dir, r.aggregate);
    auto more = write_stats_bundle(dir, r.stats);
    out.insert(out.end(), more.begin(), more.end());
    write_file(dir / "summary.txt", headline_summary(r));
    out.push_back(dir / "summary.txt");
    return out;
}

std::string headline_summary(const ReplayReport& r) {
    const auto& p = r.aggregate.pool;
    const auto& o = p.overall;
    std::ostringstream s;
    s << "citations            " << o.n << "\n";
    s << "AFR / SFR / FFR      " << pct(o.afr()) << "% / " << pct(o.sfr()) << "% / " << pct(o.ffr()) << "%\n";
    s << "CritVM               " << o.critvm << " (" << text::format_fixed(100.0 * o.critvm_rate(), 3)
      << "%), expected " << text::format_fixed(100.0 * p.expected_critvm_rate, 3) << "%\n";
    s << "YMYL SFR             " << pct(p.ymyl.ymyl.sfr()) << "% (n=" << p.ymyl.ymyl.n << ") vs "
      << pct(p.ymyl.non_ymyl.sfr()) << "% (n=" << p.ymyl.non_ymyl.n << "), OR " << fixed(p.ymyl.fisher.odds_ratio, 3)
      << "\n";
    s << "responses            " << p.exposure.responses << ", any exposure " << pct(p.exposure.share(p.exposure.any))
      << "%\n";
    for (const auto& v : r.aggregate.sensitivity)
        s << "variant " << v.variant.name << std::string(v.variant.name.size() < 13 ? 13 - v.variant.name.size() : 1, ' ')
          << "CritVM " << v.critvm << ", tau " << fixed(v.tau_model, 3) << "\n";
    return s.str();
}

}  // namespace citeaudit::io
