#pragma once

// Brute-force recomputation of the scoring and aggregation definitions, kept
// deliberately naive and independent of the library (own matrix copies, no
// shared helpers) so it can serve as an oracle.

#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Row-major copies of the alignment and suitability grids.
inline constexpr int kIpa[5][6] = {
    {1, 5, 3, 4, 2, 1}, {1, 5, 4, 3, 3, 2}, {2, 3, 5, 2, 4, 2}, {3, 4, 2, 3, 3, 3}, {2, 3, 2, 3, 4, 5},
};
inline constexpr int kSs[10][6] = {
    {5, 5, 3, 1, 1, 2}, {5, 5, 3, 1, 1, 2}, {5, 5, 3, 2, 2, 3}, {5, 5, 3, 3, 2, 3}, {5, 5, 3, 3, 2, 2},
    {4, 4, 3, 5, 2, 3}, {5, 4, 3, 3, 2, 3}, {4, 4, 4, 3, 3, 3}, {4, 3, 4, 4, 3, 3}, {4, 3, 4, 4, 4, 3},
};

// Labels as 1-based integers.
struct Row {
    std::string query_id;
    std::string model;
    std::string provider;
    std::string category;
    int qi, sp, sd, st, asf;
};

struct Scored {
    int ipa, ss, asf;
    bool fa, fs, ff, crit;
};

inline Scored score(const Row& r, int ti = 2, int ta = 2, int ts = 2) {
    Scored s{};
    s.ipa = kIpa[r.qi - 1][r.sp - 1];
    s.ss = kSs[r.sd - 1][r.st - 1];
    s.asf = r.asf;
    s.fa = !(s.ipa > ti);
    s.fs = !(s.ss > ts);
    s.ff = !(s.asf > ta);
    s.crit = s.fa && s.fs && s.ff;
    return s;
}

struct Response {
    int n = 0;
    double r_ipa = 0, r_ss = 0, r_asf = 0;
    double afr = 0, sfr = 0, ffr = 0;
    bool r_afr = false, r_sfr = false, r_ffr = false, any = false;
};

// Keyed by "query_id\x1fmodel".
inline std::map<std::string, Response> responses(const std::vector<Row>& rows) {
    std::map<std::string, std::vector<Scored>> grouped;
    for (const auto& r : rows) grouped[r.query_id + "\x1f" + r.model].push_back(score(r));
    std::map<std::string, Response> out;
    for (const auto& [k, v] : grouped) {
        Response a;
        a.n = static_cast<int>(v.size());
        int fa = 0, fs = 0, ff = 0;
        for (const auto& s : v) {
            a.r_ipa += s.ipa;
            a.r_ss += s.ss;
            a.r_asf += s.asf;
            if (s.fa) ++fa;
            if (s.fs) ++fs;
            if (s.ff) ++ff;
        }
        a.r_ipa /= a.n;
        a.r_ss /= a.n;
        a.r_asf /= a.n;
        a.afr = double(fa) / a.n;
        a.sfr = double(fs) / a.n;
        a.ffr = double(ff) / a.n;
        a.r_afr = fa != 0;
        a.r_sfr = fs != 0;
        a.r_ffr = ff != 0;
        a.any = a.r_afr || a.r_sfr || a.r_ffr;
        out[k] = a;
    }
    return out;
}

inline std::vector<Row> random_corpus(std::mt19937_64& rng, int citations) {
    std::uniform_int_distribution<int> q(1, citations / 8 + 1), m(0, 5), qi(1, 5), six(1, 6), sd(1, 10), five(1, 5),
        cat(0, 3);
    const char* models[] = {"m-a1", "m-a2", "m-b1", "m-b2", "m-c1", "m-c2"};
    const char* providers[] = {"pa", "pa", "pb", "pb", "pc", "pc"};
    const char* cats[] = {"Science", "Technology", "Culture", "Professional"};
    std::vector<Row> rows;
    for (int i = 0; i < citations; ++i) {
        Row r;
        r.query_id = "Q" + std::to_string(q(rng));
        const int mi = m(rng);
        r.model = models[mi];
        r.provider = providers[mi];
        r.category = cats[cat(rng)];
        r.qi = qi(rng);
        r.sp = six(rng);
        r.sd = sd(rng);
        r.st = six(rng);
        r.asf = five(rng);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace oracle
