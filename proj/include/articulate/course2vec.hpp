#pragma once

// Skip-gram with negative sampling over course-id enrollment sequences.

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace articulate {

struct Course2vecConfig {
    std::size_t dim = 64;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025; // decays linearly to 1e-4 of its start
    std::size_t min_count = 1;
    std::uint64_t seed = 42;

    void validate() const {
        ARTICULATE_REQUIRE(dim > 0 && window > 0 && negatives > 0 && epochs > 0 && min_count > 0,
                           ErrorCode::InvalidConfig, "course2vec counts must be positive");
        ARTICULATE_REQUIRE(learning_rate > 0.0, ErrorCode::InvalidConfig, "course2vec learning rate must be positive");
    }
};

namespace detail {

inline double sigmoid(double x) {
    if (x > 30.0) return 1.0;
    if (x < -30.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace detail

/// Trains input vectors for every course occurring at least min_count times.
/// Students are visited in ascending student_id order so the result does not
/// depend on the order of the input list.
inline EmbeddingTable train_course2vec(std::vector<EnrollmentSequence> sequences, const Course2vecConfig& cfg) {
    cfg.validate();
    std::sort(sequences.begin(), sequences.end(),
              [](const auto& a, const auto& b) { return a.student_id < b.student_id; });

    std::map<std::string, std::size_t> counts;
    for (const auto& s : sequences)
        for (const auto& e : s.events) ++counts[e.course_id];

    std::vector<std::string> vocab;
    std::map<std::string, std::size_t> index;
    std::vector<double> freq;
    for (const auto& [id, n] : counts) {
        if (n < cfg.min_count) continue;
        index.emplace(id, vocab.size());
        vocab.push_back(id);
        freq.push_back(static_cast<double>(n));
    }

    std::vector<std::vector<std::size_t>> corpus;
    std::size_t tokens = 0;
    for (const auto& s : sequences) {
        std::vector<std::size_t> ids;
        for (const auto& e : s.events) {
            auto it = index.find(e.course_id);
            if (it != index.end()) ids.push_back(it->second);
        }
        if (ids.size() >= 2) {
            tokens += ids.size();
            corpus.push_back(std::move(ids));
        }
    }
    ARTICULATE_REQUIRE(!corpus.empty(), ErrorCode::EmptyCorpus,
                       "no enrollment sequence with at least two retained events");

    // Unigram^0.75 noise distribution as a cumulative table.
    std::vector<double> cumulative(vocab.size());
    double acc = 0.0;
    for (std::size_t w = 0; w < vocab.size(); ++w) {
        acc += std::pow(freq[w], 0.75);
        cumulative[w] = acc;
    }

    const auto d = static_cast<Eigen::Index>(cfg.dim);
    const auto n = static_cast<Eigen::Index>(vocab.size());
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix input(d, n);
    Matrix output = Matrix::Zero(d, n);
    for (Eigen::Index w = 0; w < n; ++w)
        for (Eigen::Index k = 0; k < d; ++k) input(k, w) = (unit(rng) - 0.5) / static_cast<double>(cfg.dim);

    auto draw_negative = [&] {
        double u = unit(rng) * acc;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        return static_cast<std::size_t>(it - cumulative.begin());
    };

    const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(tokens);
    double processed = 0.0;
    Vector grad(d);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& seq : corpus) {
            for (std::size_t pos = 0; pos < seq.size(); ++pos, processed += 1.0) {
                const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - processed / total_steps);
                const std::size_t center = seq[pos];
                const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
                const std::size_t hi = std::min(seq.size() - 1, pos + cfg.window);
                for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
                    if (cpos == pos) continue;
                    const auto ctx = static_cast<Eigen::Index>(seq[cpos]);
                    grad.setZero();
                    for (std::size_t s = 0; s <= cfg.negatives; ++s) {
                        std::size_t target = center;
                        double label = 1.0;
                        if (s > 0) {
                            target = draw_negative();
                            if (target == center) continue;
                            label = 0.0;
                        }
                        const auto t = static_cast<Eigen::Index>(target);
                        const double g = (label - detail::sigmoid(input.col(ctx).dot(output.col(t)))) * lr;
                        grad += g * output.col(t);
                        output.col(t) += g * input.col(ctx);
                    }
                    input.col(ctx) += grad;
                }
            }
        }
    }

    EmbeddingTable table;
    table.dim = cfg.dim;
    table.provenance = Provenance::course2vec;
    for (Eigen::Index w = 0; w < n; ++w) table.vectors.emplace(vocab[static_cast<std::size_t>(w)], input.col(w));
    return table;
}

} // namespace articulate
