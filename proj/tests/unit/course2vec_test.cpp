#include "articulate/course2vec.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace articulate;
using articulate::testing::throws_code;

namespace {

EnrollmentSequence seq(const std::string& student, std::vector<std::string> courses) {
    EnrollmentSequence s{student, {}};
    int term = 0;
    for (auto& c : courses) s.events.push_back({term++, std::move(c)});
    return s;
}

/// 500 students take A and B together among fillers F*; 500 others take C
/// among fillers G*.
std::vector<EnrollmentSequence> cooccurrence_corpus(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<EnrollmentSequence> out;
    auto fillers = [&](const char* prefix, std::size_t n) {
        std::vector<std::string> f;
        for (std::size_t i = 0; i < n; ++i) f.push_back(prefix + std::to_string(rng() % 20));
        return f;
    };
    for (int s = 0; s < 500; ++s) {
        auto c = fillers("F", 3);
        c.insert(c.begin() + static_cast<std::ptrdiff_t>(rng() % 4), "A");
        c.insert(c.begin() + static_cast<std::ptrdiff_t>(rng() % 5), "B");
        out.push_back(seq("ab" + std::to_string(s), c));
    }
    for (int s = 0; s < 500; ++s) {
        auto c = fillers("G", 4);
        c.insert(c.begin() + static_cast<std::ptrdiff_t>(rng() % 5), "C");
        out.push_back(seq("c" + std::to_string(s), c));
    }
    return out;
}

Course2vecConfig small_config(std::uint64_t seed) {
    Course2vecConfig cfg;
    cfg.dim = 16;
    cfg.window = 3;
    cfg.epochs = 5;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST(Course2vec, VocabularyRespectsMinCount) {
    std::vector<EnrollmentSequence> corpus{seq("s1", {"A", "B", "A"}), seq("s2", {"B", "C"}), seq("s3", {"D"})};
    auto cfg = small_config(1);
    cfg.min_count = 2;
    auto t = train_course2vec(corpus, cfg);
    std::set<std::string> keys;
    for (const auto& [id, v] : t.vectors) keys.insert(id);
    EXPECT_EQ(keys, (std::set<std::string>{"A", "B"}));
    EXPECT_EQ(t.provenance, Provenance::course2vec);
    EXPECT_EQ(t.dim, 16u);

    cfg.min_count = 1;
    keys.clear();
    for (const auto& [id, v] : train_course2vec(corpus, cfg).vectors) keys.insert(id);
    EXPECT_EQ(keys, (std::set<std::string>{"A", "B", "C", "D"}));
}

TEST(Course2vec, EmptyCorpus) {
    EXPECT_TRUE(throws_code([] { train_course2vec({}, small_config(1)); }, ErrorCode::EmptyCorpus));
    EXPECT_TRUE(throws_code([] { train_course2vec({seq("s", {"A"}), seq("t", {"B"})}, small_config(1)); },
                            ErrorCode::EmptyCorpus));
}

TEST(Course2vec, InvalidConfig) {
    auto cfg = small_config(1);
    cfg.window = 0;
    EXPECT_TRUE(throws_code([&] { train_course2vec({seq("s", {"A", "B"})}, cfg); }, ErrorCode::InvalidConfig));
}

TEST(Course2vec, DeterministicAndStudentOrderInvariant) {
    auto corpus = cooccurrence_corpus(3);
    auto a = train_course2vec(corpus, small_config(9));
    auto b = train_course2vec(corpus, small_config(9));
    EXPECT_TRUE(a == b);

    std::mt19937_64 rng(4);
    std::shuffle(corpus.begin(), corpus.end(), rng);
    EXPECT_TRUE(train_course2vec(corpus, small_config(9)) == a);
    EXPECT_FALSE(train_course2vec(corpus, small_config(10)) == a);
}

TEST(Course2vec, CooccurringCoursesAreCloserAveragedOverSeeds) {
    double ab = 0.0, ac = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto t = train_course2vec(cooccurrence_corpus(seed), small_config(seed));
        ab += cosine(t.at("A"), t.at("B"));
        ac += cosine(t.at("A"), t.at("C"));
    }
    EXPECT_GT(ab / 5, ac / 5);
}
