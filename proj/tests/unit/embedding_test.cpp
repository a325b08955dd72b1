#include "articulate/embedding.hpp"
#include "articulate/synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace articulate;
using articulate::testing::TempDir;
using articulate::testing::throws_code;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

EmbeddingTable table_of(std::size_t dim, std::initializer_list<std::pair<const char*, Vector>> rows) {
    EmbeddingTable t;
    t.dim = dim;
    for (const auto& [id, v] : rows) t.insert(id, v);
    return t;
}

} // namespace

TEST(LoadEmbeddings, RecordsAndErrors) {
    TempDir dir;
    auto one = dir.write("one.jsonl", "{\"course_id\": \"cc:A\", \"vector\": [1.5, -2, 3e-1]}\n\n");
    auto t = load_embeddings(one, 3);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t.provenance, Provenance::text);
    EXPECT_EQ(t.at("cc:A"), vec({1.5, -2.0, 0.3}));

    auto wide = dir.write("wide.jsonl", "{\"course_id\": \"cc:A\", \"vector\": [1, 2, 3, 4]}\n");
    EXPECT_TRUE(throws_code([&] { load_embeddings(wide, 3); }, ErrorCode::DimensionMismatch, "cc:A"));

    auto dup = dir.write("dup.jsonl", "{\"course_id\": \"cc:A\", \"vector\": [1, 2, 3]}\n"
                                      "{\"course_id\": \"cc:A\", \"vector\": [1, 2, 3]}\n");
    EXPECT_TRUE(throws_code([&] { load_embeddings(dup, 3); }, ErrorCode::DuplicateCourse, "line 2"));

    auto junk = dir.write("junk.jsonl", "{\"course_id\": 3}\n");
    EXPECT_TRUE(throws_code([&] { load_embeddings(junk, 3); }, ErrorCode::MalformedRow, "line 1"));
}

TEST(LoadEmbeddings, SaveThenLoadIsExact) {
    TempDir dir;
    auto cat = articulate::testing::small_catalog();
    auto t = synthetic_embeddings(cat, 7, 3);
    save_embeddings(dir.file("t.jsonl"), t);
    EXPECT_TRUE(load_embeddings(dir.file("t.jsonl"), 7) == t);
}

TEST(RestrictToCatalog, DropsUnknownCourses) {
    auto cat = articulate::testing::small_catalog();
    auto t = table_of(2, {{"cc:BIO101", vec({1, 0})}, {"zz:GONE", vec({0, 1})}});
    std::vector<std::string> dropped;
    EXPECT_EQ(restrict_to_catalog(t, cat, &dropped), 1u);
    EXPECT_EQ(dropped, std::vector<std::string>{"zz:GONE"});
    EXPECT_TRUE(t.contains("cc:BIO101"));
}

TEST(L2Normalize, Cases) {
    auto t = l2_normalize(table_of(2, {{"a", vec({3, 4})}, {"b", vec({0, 1})}}));
    EXPECT_NEAR(t.at("a")[0], 0.6, 1e-15);
    EXPECT_NEAR(t.at("a")[1], 0.8, 1e-15);
    EXPECT_EQ(t.at("b"), vec({0, 1}));
    EXPECT_TRUE(throws_code([] { l2_normalize(table_of(2, {{"z", vec({0, 0})}})); }, ErrorCode::ZeroVector, "'z'"));
}

TEST(L2Normalize, IdempotentAndUnitOnRandomTables) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        EmbeddingTable t;
        t.dim = 1 + rng() % 64;
        for (int i = 0; i < 30; ++i) {
            Vector v(static_cast<Eigen::Index>(t.dim));
            for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
            t.insert("c" + std::to_string(i), v);
        }
        auto once = l2_normalize(t);
        for (const auto& [id, v] : once.vectors) EXPECT_NEAR(v.norm(), 1.0, 1e-12);
        EXPECT_TRUE(l2_normalize(once) == once);
    }
}

TEST(Compose, ConcatenatesSharedKeysOnly) {
    auto a = l2_normalize(table_of(2, {{"x", vec({1, 1})}, {"only_a", vec({1, 0})}}));
    auto b = l2_normalize(table_of(3, {{"x", vec({0, 2, 0})}, {"only_b", vec({1, 0, 0})}}));
    auto c = compose(a, b);
    EXPECT_EQ(c.dim, 5u);
    EXPECT_EQ(c.provenance, Provenance::concat);
    EXPECT_EQ(c.size(), 1u);
    EXPECT_FALSE(c.contains("only_a"));
    EXPECT_NEAR(c.at("x").norm(), std::sqrt(2.0), 1e-15);

    // Projection onto the first dim_a coordinates recovers a exactly.
    EXPECT_EQ(Vector(c.at("x").head(2)), a.at("x"));
    EXPECT_EQ(Vector(c.at("x").tail(3)), b.at("x"));

    EXPECT_TRUE(throws_code([&] { compose(table_of(1, {{"p", vec({1})}}), table_of(1, {{"q", vec({1})}})); },
                            ErrorCode::DisjointKeys));
}

TEST(SyntheticEmbeddings, DeterministicAndUnitNorm) {
    auto cat = articulate::testing::small_catalog();
    auto a = synthetic_embeddings(cat, 8, 21);
    auto b = synthetic_embeddings(cat, 8, 21);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == synthetic_embeddings(cat, 8, 22));
    EXPECT_EQ(a.size(), cat.courses().size());
    for (const auto& [id, v] : a.vectors) EXPECT_NEAR(v.norm(), 1.0, 1e-9);
    EXPECT_TRUE(throws_code([&] { synthetic_embeddings(cat, 1, 0); }, ErrorCode::InvalidConfig));
}

TEST(SyntheticEmbeddings, NoiselessPlantedPairsAreExactlyAlignedByTrueRotations) {
    auto cat = articulate::testing::small_catalog();
    PlantedSpec spec;
    spec.class_of = {{"cc:BIO101", "bio"}, {"uni:BIO110", "bio"}, {"tech:BIO1", "bio"}, {"cc:MAT101", "mat"},
                     {"uni:MAT130", "mat"}};
    spec.noise = 0.0;
    PlantedTruth truth;
    auto t = synthetic_embeddings(cat, 6, 4, spec, &truth);
    for (const auto& [id, r] : truth.rotation) {
        EXPECT_LE(orthogonality_error(r), 1e-12);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    }
    // Row convention: x_i = z·R_i, so x_i·(R_iᵀ·R_j) = z·R_j = x_j.
    auto aligned = [&](const std::string& a, const std::string& b) {
        const Matrix& ri = truth.rotation.at(cat.institution_of(a));
        const Matrix& rj = truth.rotation.at(cat.institution_of(b));
        Vector predicted = (ri.transpose() * rj).transpose() * t.at(a);
        return cosine(predicted, t.at(b));
    };
    EXPECT_NEAR(aligned("cc:BIO101", "uni:BIO110"), 1.0, 1e-12);
    EXPECT_NEAR(aligned("tech:BIO1", "cc:BIO101"), 1.0, 1e-12);
    EXPECT_NEAR(aligned("uni:MAT130", "cc:MAT101"), 1.0, 1e-12);
    // Different classes are not aligned.
    EXPECT_LT(aligned("cc:BIO101", "uni:MAT130"), 0.99);
}

TEST(PlantedBenchmark, Structure) {
    PlantedBenchmarkConfig cfg;
    cfg.institutions = 3;
    cfg.courses_per_institution = 20;
    cfg.classes = 30;
    cfg.dim = 8;
    auto b = make_planted_benchmark(cfg);
    EXPECT_EQ(b.catalog.courses().size(), 60u);
    for (const auto& p : b.pairs) {
        EXPECT_EQ(b.class_of.at(p.source_course_id), b.class_of.at(p.target_course_id));
        EXPECT_NE(b.catalog.institution_of(p.source_course_id), b.catalog.institution_of(p.target_course_id));
    }
    auto again = make_planted_benchmark(cfg);
    EXPECT_TRUE(again.embeddings == b.embeddings);
    EXPECT_EQ(again.pairs, b.pairs);
}
