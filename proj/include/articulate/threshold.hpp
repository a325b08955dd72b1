#pragma once

// Pseudo-negative sampling, ROC/AUC, Youden-J threshold selection,
// above-threshold articulation expansion and adoption projection.

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"
#include "articulate/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace articulate {

using CoursePair = std::pair<std::string, std::string>;

/// Ordered cross-institution pairs of lower-division transferable courses
/// with no established record; n distinct pairs, deterministic per seed.
inline std::vector<CoursePair> sample_pseudo_negatives(const Catalog& catalog,
                                                       const std::vector<ArticulationPair>& established,
                                                       std::size_t n, std::uint64_t seed) {
    ARTICULATE_REQUIRE(n >= 1, ErrorCode::InvalidConfig, "pseudo-negative count must be at least 1");
    std::vector<const Course*> eligible;
    std::map<std::string, std::size_t> per_inst;
    for (const auto& [id, c] : catalog.courses()) {
        if (c.level != Level::lower_division || !c.transferable) continue;
        eligible.push_back(&c);
        ++per_inst[c.institution_id];
    }
    std::set<CoursePair> known;
    for (const auto& p : established) known.emplace(p.source_course_id, p.target_course_id);

    // Upper bound on the population: cross-institution ordered pairs minus
    // established pairs among eligible courses.
    const double m = static_cast<double>(eligible.size());
    double cross = m * m;
    for (const auto& [inst, k] : per_inst) cross -= static_cast<double>(k) * static_cast<double>(k);
    std::size_t known_eligible = 0;
    for (const auto& [a, b] : known) {
        const Course* ca = catalog.find_course(a);
        const Course* cb = catalog.find_course(b);
        if (ca && cb && ca->level == Level::lower_division && cb->level == Level::lower_division &&
            ca->transferable && cb->transferable && ca->institution_id != cb->institution_id)
            ++known_eligible;
    }
    const double population = cross - static_cast<double>(known_eligible);
    ARTICULATE_REQUIRE(population >= static_cast<double>(n), ErrorCode::InsufficientPopulation,
                       "only " + std::to_string(static_cast<long long>(std::max(0.0, population))) +
                           " eligible lower-division pairs for " + std::to_string(n) + " pseudo-negatives");

    std::mt19937_64 rng(seed);
    std::vector<CoursePair> out;
    out.reserve(n);
    if (static_cast<double>(n) * 2.0 > population) {
        // Dense request: enumerate then shuffle.
        std::vector<CoursePair> all;
        for (const Course* a : eligible)
            for (const Course* b : eligible)
                if (a->institution_id != b->institution_id && !known.count({a->id, b->id}))
                    all.emplace_back(a->id, b->id);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(n);
        return all;
    }
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    std::set<CoursePair> chosen;
    while (out.size() < n) {
        const Course* a = eligible[pick(rng)];
        const Course* b = eligible[pick(rng)];
        if (a->institution_id == b->institution_id) continue;
        CoursePair pair{a->id, b->id};
        if (known.count(pair) || !chosen.insert(pair).second) continue;
        out.push_back(std::move(pair));
    }
    return out;
}

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double tnr = 0.0;
    double fnr = 0.0;
    std::size_t true_pos = 0;  // positives scoring >= threshold
    std::size_t false_pos = 0; // negatives scoring >= threshold
};

struct ThresholdReport {
    std::vector<RocPoint> roc; // threshold descending; first point is the sentinel above every score
    double auc = 0.0;
    double best_threshold = 0.0;
    double pos_mean = 0.0;
    double neg_mean = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

/// Sweeps the distinct observed scores from high to low (a score counts as
/// positive when >= threshold) and integrates the curve by trapezoids.
inline ThresholdReport roc_auc(std::vector<double> pos, std::vector<double> neg) {
    ARTICULATE_REQUIRE(!pos.empty() && !neg.empty(), ErrorCode::EmptyScores,
                       "ROC needs at least one positive and one negative score");
    for (double s : pos) ARTICULATE_REQUIRE(std::isfinite(s), ErrorCode::MalformedRow, "non-finite positive score");
    for (double s : neg) ARTICULATE_REQUIRE(std::isfinite(s), ErrorCode::MalformedRow, "non-finite negative score");
    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end(), std::greater<>());

    ThresholdReport rep;
    rep.n_pos = pos.size();
    rep.n_neg = neg.size();
    double sp = 0.0, sn = 0.0;
    for (double s : pos) sp += s;
    for (double s : neg) sn += s;
    rep.pos_mean = sp / static_cast<double>(pos.size());
    rep.neg_mean = sn / static_cast<double>(neg.size());

    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    auto point = [&](double t, std::size_t tp, std::size_t fp) {
        RocPoint r;
        r.threshold = t;
        r.true_pos = tp;
        r.false_pos = fp;
        r.tpr = static_cast<double>(tp) / np;
        r.fpr = static_cast<double>(fp) / nn;
        r.fnr = 1.0 - r.tpr;
        r.tnr = 1.0 - r.fpr;
        return r;
    };

    const double top = std::max(pos.front(), neg.front());
    rep.roc.push_back(point(std::nextafter(top, std::numeric_limits<double>::infinity()), 0, 0));
    std::size_t ip = 0, in = 0;
    while (ip < pos.size() || in < neg.size()) {
        double t = -std::numeric_limits<double>::infinity();
        if (ip < pos.size()) t = std::max(t, pos[ip]);
        if (in < neg.size()) t = std::max(t, neg[in]);
        while (ip < pos.size() && pos[ip] == t) ++ip;
        while (in < neg.size() && neg[in] == t) ++in;
        rep.roc.push_back(point(t, ip, in));
    }

    // Trapezoids in count space, divided once at the end.
    double area = 0.0;
    for (std::size_t i = 1; i < rep.roc.size(); ++i) {
        const auto& a = rep.roc[i - 1];
        const auto& b = rep.roc[i];
        area += static_cast<double>(b.false_pos - a.false_pos) * static_cast<double>(a.true_pos + b.true_pos) / 2.0;
    }
    rep.auc = area / (np * nn);
    return rep;
}

/// Youden's J = TPR − FPR, maximized over the ROC points; the largest
/// threshold wins among ties. J is compared exactly in integer form.
inline double best_threshold(const ThresholdReport& report) {
    ARTICULATE_REQUIRE(!report.roc.empty(), ErrorCode::EmptyScores, "ROC has no points");
    const auto np = static_cast<long double>(report.n_pos);
    const auto nn = static_cast<long double>(report.n_neg);
    const RocPoint* best = nullptr;
    long double best_j = 0;
    for (const auto& r : report.roc) {
        // J·np·nn; exact for counts below 2^32.
        long double j = static_cast<long double>(r.true_pos) * nn - static_cast<long double>(r.false_pos) * np;
        if (!best || j > best_j || (j == best_j && r.threshold > best->threshold)) {
            best = &r;
            best_j = j;
        }
    }
    return best->threshold;
}

inline ThresholdReport threshold_report(std::vector<double> pos, std::vector<double> neg) {
    auto rep = roc_auc(std::move(pos), std::move(neg));
    rep.best_threshold = best_threshold(rep);
    return rep;
}

/// Cosine of each pair in a shared table; pairs lacking a vector are skipped.
inline std::vector<double> pair_cosines(const EmbeddingTable& shared, const std::vector<CoursePair>& pairs,
                                        std::size_t* skipped = nullptr) {
    std::vector<double> out;
    std::size_t miss = 0;
    for (const auto& [a, b] : pairs) {
        if (!shared.contains(a) || !shared.contains(b)) {
            ++miss;
            continue;
        }
        out.push_back(std::clamp(cosine(shared.at(a), shared.at(b)), -1.0, 1.0));
    }
    if (skipped) *skipped = miss;
    return out;
}

inline std::vector<CoursePair> as_course_pairs(const std::vector<ArticulationPair>& pairs) {
    std::vector<CoursePair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.emplace_back(p.source_course_id, p.target_course_id);
    return out;
}

struct ExpandedPair {
    std::string source_course_id;
    std::string target_course_id;
    double cosine = 0.0;
};

struct ExpansionResult {
    std::vector<ExpandedPair> new_pairs; // sorted by (source, target)
    std::size_t excluded_existing = 0;
    SegmentCounts by_segment;
    double ratio_vs_existing = 0.0;
    double threshold = 0.0;
};

enum class ExpansionMode { per_institution, global };

/// Top-1 candidate for every (source course, receiving institution), kept
/// when its cosine clears the threshold and the pair is not established.
/// Global mode keeps one top-1 per source course across all other
/// institutions instead.
inline ExpansionResult expand(const EmbeddingTable& shared_table, const Catalog& catalog,
                              const std::vector<ArticulationPair>& established, double threshold,
                              ExpansionMode mode = ExpansionMode::per_institution) {
    CandidateIndex index(shared_table, catalog);
    std::set<CoursePair> known;
    for (const auto& p : established) known.emplace(p.source_course_id, p.target_course_id);

    ExpansionResult res;
    res.threshold = threshold;
    auto consider = [&](const std::string& source, const RankedEntry& best) {
        if (best.cosine < threshold) return;
        if (known.count({source, best.course_id})) {
            ++res.excluded_existing;
            return;
        }
        res.new_pairs.push_back({source, best.course_id, best.cosine});
    };

    for (const auto& [inst_id, pool] : index.pools()) {
        for (const auto& src : pool) {
            const Vector& q = shared_table.at(src.course_id);
            if (mode == ExpansionMode::per_institution) {
                for (const auto& [recv, recv_pool] : index.pools()) {
                    if (recv == inst_id) continue;
                    auto top = index.top_k(q, recv, 1, src.course_id);
                    if (!top.empty()) consider(src.course_id, top.front());
                }
            } else {
                std::vector<RankedEntry> best;
                for (const auto& [recv, recv_pool] : index.pools()) {
                    if (recv == inst_id) continue;
                    auto top = index.top_k(q, recv, 1, src.course_id);
                    if (!top.empty()) best.push_back(top.front());
                }
                if (best.empty()) continue;
                consider(src.course_id, *std::min_element(best.begin(), best.end(), ranks_before));
            }
        }
    }
    std::sort(res.new_pairs.begin(), res.new_pairs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source_course_id, a.target_course_id) < std::tie(b.source_course_id, b.target_course_id);
    });
    for (const auto& p : res.new_pairs) {
        count_pathway(res.by_segment, catalog.institution(catalog.institution_of(p.source_course_id)).segment,
                      catalog.institution(catalog.institution_of(p.target_course_id)).segment);
    }
    res.ratio_vs_existing =
        established.empty() ? 0.0 : static_cast<double>(res.new_pairs.size()) / static_cast<double>(established.size());
    return res;
}

struct AdoptionProjection {
    std::uint64_t expected_accepted = 0;
    double fold_increase = 1.0;
};

/// expected = round-half-up(n_candidates × rate);
/// fold = (n_existing + expected) / n_existing.
inline AdoptionProjection project_adoption(std::uint64_t n_candidates, double adoption_rate, std::uint64_t n_existing) {
    ARTICULATE_REQUIRE(adoption_rate >= 0.0 && adoption_rate <= 1.0, ErrorCode::InvalidConfig,
                       "adoption rate must lie in [0, 1]");
    ARTICULATE_REQUIRE(n_existing >= 1, ErrorCode::InvalidConfig, "existing articulation count must be at least 1");
    const auto expected = static_cast<std::uint64_t>(std::floor(static_cast<double>(n_candidates) * adoption_rate + 0.5));
    return {expected, static_cast<double>(n_existing + expected) / static_cast<double>(n_existing)};
}

} // namespace articulate
