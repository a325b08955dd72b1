#include "articulate/threshold.hpp"
#include "articulate/ssa.hpp"
#include "articulate/synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace articulate;
using articulate::testing::small_catalog;
using articulate::testing::throws_code;

namespace {

// Mann-Whitney statistic: P(pos > neg) + ½·P(pos == neg), by all pairs.
double pair_statistic(const std::vector<double>& pos, const std::vector<double>& neg) {
    double s = 0.0;
    for (double p : pos)
        for (double n : neg) s += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return s / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Scan every candidate threshold (each observed score), J recomputed from scratch.
double scan_best(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::set<double, std::greater<>> cands(pos.begin(), pos.end());
    cands.insert(neg.begin(), neg.end());
    double best_t = 0.0, best_j = -2.0;
    for (double t : cands) {
        double tp = 0, fp = 0;
        for (double p : pos) tp += p >= t;
        for (double n : neg) fp += n >= t;
        double j = tp / pos.size() - fp / neg.size();
        if (j > best_j + 1e-15) {
            best_j = j;
            best_t = t;
        }
    }
    return best_t;
}

} // namespace

TEST(RocAuc, MatchesPairStatistic) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> a(0.6, 0.2), b(0.4, 0.2);
    std::uniform_int_distribution<int> coarse(0, 20);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> pos, neg;
        for (int i = 0; i < 150; ++i) {
            // Half the trials use coarse scores so ties are common.
            pos.push_back(trial % 2 ? coarse(rng) / 20.0 : a(rng));
            neg.push_back(trial % 2 ? coarse(rng) / 25.0 : b(rng));
        }
        EXPECT_NEAR(roc_auc(pos, neg).auc, pair_statistic(pos, neg), 1e-9);
    }
}

TEST(RocAuc, ExtremesAndCurveShape) {
    EXPECT_NEAR(roc_auc({0.8, 0.9}, {0.1, 0.2}).auc, 1.0, 1e-12);
    EXPECT_NEAR(roc_auc({0.1, 0.2}, {0.8, 0.9}).auc, 0.0, 1e-12);
    EXPECT_NEAR(roc_auc({0.5, 0.5, 0.5}, {0.5, 0.5}).auc, 0.5, 1e-12);

    auto rep = roc_auc({0.9, 0.4, 0.7}, {0.4, 0.1});
    ASSERT_EQ(rep.roc.size(), 5u); // sentinel + 4 distinct scores
    EXPECT_GT(rep.roc.front().threshold, 0.9);
    EXPECT_EQ(rep.roc.front().true_pos, 0u);
    EXPECT_EQ(rep.roc.back().true_pos, 3u);
    EXPECT_EQ(rep.roc.back().false_pos, 2u);
    for (std::size_t i = 1; i < rep.roc.size(); ++i) {
        EXPECT_LT(rep.roc[i].threshold, rep.roc[i - 1].threshold);
        EXPECT_GE(rep.roc[i].tpr, rep.roc[i - 1].tpr);
        EXPECT_GE(rep.roc[i].fpr, rep.roc[i - 1].fpr);
    }
    for (const auto& p : rep.roc) {
        EXPECT_DOUBLE_EQ(p.fnr, 1.0 - p.tpr);
        EXPECT_DOUBLE_EQ(p.tnr, 1.0 - p.fpr);
    }
    EXPECT_NEAR(rep.pos_mean, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(rep.neg_mean, 0.25, 1e-12);
}

TEST(RocAuc, RejectsEmptyAndNonFinite) {
    EXPECT_TRUE(throws_code([] { roc_auc({}, {0.1}); }, ErrorCode::EmptyScores));
    EXPECT_TRUE(throws_code([] { roc_auc({0.1}, {}); }, ErrorCode::EmptyScores));
    EXPECT_TRUE(throws_code([] { roc_auc({std::nan("")}, {0.1}); }, ErrorCode::MalformedRow));
}

TEST(BestThreshold, HandCasesAndScanOracle) {
    EXPECT_DOUBLE_EQ(threshold_report({0.8, 0.9}, {0.1, 0.2}).best_threshold, 0.8);
    EXPECT_DOUBLE_EQ(threshold_report({0.6}, {0.4}).best_threshold, 0.6);
    EXPECT_DOUBLE_EQ(threshold_report({0.5}, {0.3}).best_threshold, 0.5);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> a(0.7, 0.15), b(0.4, 0.15);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> pos, neg;
        for (int i = 0; i < 60; ++i) pos.push_back(std::round(a(rng) * 50) / 50);
        for (int i = 0; i < 80; ++i) neg.push_back(std::round(b(rng) * 50) / 50);
        EXPECT_DOUBLE_EQ(threshold_report(pos, neg).best_threshold, scan_best(pos, neg)) << "trial " << trial;
    }
}

TEST(PseudoNegatives, EligibilityAndDeterminism) {
    auto cat = small_catalog();
    std::vector<ArticulationPair> est{{"cc:BIO101", "uni:BIO110"}};
    // Eligible: 3 cc + 3 uni lower + 2 tech = 8 courses; cross pairs 64 − 9 − 9 − 4 = 42, minus 1 established.
    auto all = sample_pseudo_negatives(cat, est, 41, 1);
    std::set<CoursePair> uniq(all.begin(), all.end());
    EXPECT_EQ(uniq.size(), 41u);
    for (const auto& [a, b] : all) {
        EXPECT_NE(cat.institution_of(a), cat.institution_of(b));
        EXPECT_NE(a, "uni:MAT400");
        EXPECT_NE(b, "uni:MAT400");
        EXPECT_FALSE(a == "cc:BIO101" && b == "uni:BIO110");
    }
    EXPECT_TRUE(throws_code([&] { sample_pseudo_negatives(cat, est, 42, 1); }, ErrorCode::InsufficientPopulation));
    EXPECT_EQ(sample_pseudo_negatives(cat, est, 5, 3), sample_pseudo_negatives(cat, est, 5, 3));
    EXPECT_EQ(sample_pseudo_negatives(cat, est, 5, 3).size(), 5u);
}

namespace {

struct ExpandFixture {
    PlantedBenchmark b;
    EmbeddingTable shared;
};

ExpandFixture expand_fixture() {
    PlantedBenchmarkConfig cfg;
    cfg.institutions = 3;
    cfg.courses_per_institution = 30;
    cfg.classes = 40;
    cfg.dim = 8;
    cfg.noise = 0.05;
    ExpandFixture f{make_planted_benchmark(cfg), {}};
    auto model = train_ssa(f.b.embeddings, f.b.pairs, f.b.catalog, SsaConfig{});
    f.shared = encode_shared(model, f.b.embeddings, f.b.catalog);
    return f;
}

} // namespace

TEST(Expand, ThresholdMonotoneExcludesEstablishedAndCountsSegments) {
    auto f = expand_fixture();
    auto none = expand(f.shared, f.b.catalog, f.b.pairs, 1.01);
    EXPECT_TRUE(none.new_pairs.empty());
    EXPECT_EQ(none.excluded_existing, 0u);

    std::set<std::pair<std::string, std::string>> est;
    for (const auto& p : f.b.pairs) est.emplace(p.source_course_id, p.target_course_id);
    std::size_t prev = 0;
    for (double t : {0.99, 0.8, 0.5, 0.0, -1.0}) {
        auto r = expand(f.shared, f.b.catalog, f.b.pairs, t);
        EXPECT_GE(r.new_pairs.size(), prev);
        prev = r.new_pairs.size();
        EXPECT_EQ(r.by_segment.total(), r.new_pairs.size());
        EXPECT_DOUBLE_EQ(r.ratio_vs_existing, static_cast<double>(r.new_pairs.size()) / f.b.pairs.size());
        std::set<std::pair<std::string, std::string>> keys;
        for (const auto& p : r.new_pairs) {
            EXPECT_GE(p.cosine, t);
            EXPECT_FALSE(est.count({p.source_course_id, p.target_course_id}));
            EXPECT_NE(f.b.catalog.institution_of(p.source_course_id), f.b.catalog.institution_of(p.target_course_id));
            EXPECT_TRUE(keys.emplace(p.source_course_id, f.b.catalog.institution_of(p.target_course_id)).second);
        }
    }
    // At −1 every (source, other institution) yields a top-1 that is either new or established.
    auto everything = expand(f.shared, f.b.catalog, f.b.pairs, -1.0);
    const std::size_t courses = f.b.catalog.courses().size();
    EXPECT_EQ(everything.new_pairs.size() + everything.excluded_existing, courses * 2);
    EXPECT_GT(everything.excluded_existing, 0u);

    auto global = expand(f.shared, f.b.catalog, f.b.pairs, -1.0, ExpansionMode::global);
    EXPECT_EQ(global.new_pairs.size() + global.excluded_existing, courses);
}

TEST(Expand, WithoutEstablishedEveryTop1IsNew) {
    auto f = expand_fixture();
    auto r = expand(f.shared, f.b.catalog, {}, 0.5);
    EXPECT_EQ(r.excluded_existing, 0u);
    EXPECT_DOUBLE_EQ(r.ratio_vs_existing, 0.0);
    EXPECT_TRUE(std::is_sorted(r.new_pairs.begin(), r.new_pairs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source_course_id, a.target_course_id) < std::tie(b.source_course_id, b.target_course_id);
    }));
}

TEST(ProjectAdoption, Arithmetic) {
    auto p = project_adoption(1000, 0.5, 100);
    EXPECT_EQ(p.expected_accepted, 500u);
    EXPECT_DOUBLE_EQ(p.fold_increase, 6.0);
    EXPECT_EQ(project_adoption(3, 0.5, 1).expected_accepted, 2u); // 1.5 rounds up
    EXPECT_EQ(project_adoption(0, 0.7, 10).expected_accepted, 0u);
    EXPECT_DOUBLE_EQ(project_adoption(0, 0.7, 10).fold_increase, 1.0);
    auto big = project_adoption(2787526, 0.6123, 156968);
    EXPECT_LE(std::llabs(static_cast<long long>(big.expected_accepted) - 1706802), 1);
    EXPECT_NEAR(big.fold_increase, 11.87, 0.01);
    EXPECT_TRUE(throws_code([] { project_adoption(10, 1.5, 1); }, ErrorCode::InvalidConfig));
    EXPECT_TRUE(throws_code([] { project_adoption(10, 0.5, 0); }, ErrorCode::InvalidConfig));
}
