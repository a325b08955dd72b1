#pragma once

// Exhaustive cosine KNN restricted to one receiving institution, recall@k,
// and k-fold cross-validation of SSA.

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"
#include "articulate/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace articulate {

struct RankedEntry {
    std::string course_id;
    double cosine = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedCandidates {
    std::string source_course_id;
    std::string receiving_institution_id;
    std::vector<RankedEntry> entries; // cosine descending, then course id ascending
};

inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.course_id < b.course_id;
}

/// Per-institution candidate pools of unit vectors (transferable courses with
/// a vector), built once and shared read-only by all queries.
class CandidateIndex {
public:
    struct Entry {
        std::string course_id;
        Vector unit;
    };

    CandidateIndex(const EmbeddingTable& table, const Catalog& catalog, bool transferable_only = true)
        : table_(&table), catalog_(&catalog) {
        for (const auto& [id, v] : table.vectors) {
            const Course* c = catalog.find_course(id);
            if (!c || (transferable_only && !c->transferable)) continue;
            double n = v.norm();
            if (n == 0.0) continue;
            pools_[c->institution_id].push_back({id, v / n});
        }
    }

    const std::vector<Entry>& pool(const std::string& institution) const {
        static const std::vector<Entry> empty;
        auto it = pools_.find(institution);
        return it == pools_.end() ? empty : it->second;
    }
    bool in_pool(const std::string& course_id) const {
        const Course* c = catalog_->find_course(course_id);
        if (!c) return false;
        const auto& p = pool(c->institution_id);
        return std::binary_search(p.begin(), p.end(), course_id,
                                  [](const auto& a, const auto& b) { return key(a) < key(b); });
    }
    const std::map<std::string, std::vector<Entry>>& pools() const noexcept { return pools_; }
    const EmbeddingTable& table() const noexcept { return *table_; }
    const Catalog& catalog() const noexcept { return *catalog_; }

    /// Top-min(k, pool) candidates for a query vector; `exclude` is skipped.
    std::vector<RankedEntry> top_k(const Vector& query, const std::string& institution, std::size_t k,
                                   const std::string& exclude = {}) const {
        const auto& p = pool(institution);
        std::vector<RankedEntry> scored;
        scored.reserve(p.size());
        const double qn = query.norm();
        for (const auto& e : p) {
            if (e.course_id == exclude) continue;
            double c = qn == 0.0 ? 0.0 : std::clamp(e.unit.dot(query) / qn, -1.0, 1.0);
            scored.push_back({e.course_id, c});
        }
        const std::size_t n = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                          ranks_before);
        scored.resize(n);
        return scored;
    }

private:
    static const std::string& key(const Entry& e) { return e.course_id; }
    static const std::string& key(const std::string& s) { return s; }

    const EmbeddingTable* table_;
    const Catalog* catalog_;
    std::map<std::string, std::vector<Entry>> pools_; // entries in course id order
};

inline RankedCandidates rank_candidates(const CandidateIndex& index, const std::string& source_course,
                                        const std::string& receiving_institution, std::size_t k) {
    const Vector& q = index.table().at(source_course);
    ARTICULATE_REQUIRE(!index.pool(receiving_institution).empty(), ErrorCode::EmptyPool,
                       "institution '" + receiving_institution + "' has no embedded candidate courses");
    auto entries = index.top_k(q, receiving_institution, k, source_course);
    ARTICULATE_REQUIRE(!entries.empty(), ErrorCode::EmptyPool,
                       "institution '" + receiving_institution + "' has no candidates besides the source");
    return {source_course, receiving_institution, std::move(entries)};
}

inline RankedCandidates rank_candidates(const EmbeddingTable& shared_table, const Catalog& catalog,
                                        const std::string& source_course, const std::string& receiving_institution,
                                        std::size_t k) {
    CandidateIndex index(shared_table, catalog);
    return rank_candidates(index, source_course, receiving_institution, k);
}

struct FoldSummary {
    int fold = 0;
    std::size_t train_pairs = 0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    std::map<std::size_t, std::size_t> correct_at_k;
    double final_loss = 0.0;
    std::size_t epochs_run = 0;
};

struct EvalReport {
    std::vector<std::size_t> ks{1, 5};
    std::map<std::size_t, std::size_t> correct_at_k;
    std::size_t total = 0;   // evaluated pairs
    std::size_t skipped = 0; // pairs with an endpoint outside the embedded pool
    std::vector<FoldSummary> per_fold;

    double recall(std::size_t k) const {
        auto it = correct_at_k.find(k);
        if (total == 0 || it == correct_at_k.end()) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total);
    }
    double recall_at_1() const { return recall(1); }
    double recall_at_5() const { return recall(5); }
};

struct RecallCounts {
    std::map<std::size_t, std::size_t> correct_at_k;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

/// Scores eval pairs against an already-encoded shared table.
inline RecallCounts count_hits(const CandidateIndex& index, const std::vector<ArticulationPair>& eval_pairs,
                               const std::vector<std::size_t>& ks) {
    RecallCounts out;
    for (auto k : ks) out.correct_at_k[k] = 0;
    const std::size_t kmax = ks.empty() ? 1 : *std::max_element(ks.begin(), ks.end());
    const auto& table = index.table();
    for (const auto& p : eval_pairs) {
        if (!table.contains(p.source_course_id) || !index.in_pool(p.target_course_id)) {
            ++out.skipped;
            continue;
        }
        ++out.evaluated;
        const auto& receiving = index.catalog().institution_of(p.target_course_id);
        auto top = index.top_k(table.at(p.source_course_id), receiving, kmax, p.source_course_id);
        auto hit = std::find_if(top.begin(), top.end(), [&](const auto& e) { return e.course_id == p.target_course_id; });
        if (hit == top.end()) continue;
        const auto rank = static_cast<std::size_t>(hit - top.begin()) + 1;
        for (auto k : ks)
            if (rank <= k) ++out.correct_at_k[k];
    }
    return out;
}

inline RecallCounts evaluate_model(const AlignmentModel& model, const EmbeddingTable& embeddings,
                                   const Catalog& catalog, const std::vector<ArticulationPair>& eval_pairs,
                                   const std::vector<std::size_t>& ks) {
    const auto shared = encode_shared(model, embeddings, catalog);
    CandidateIndex index(shared, catalog);
    return count_hits(index, eval_pairs, ks);
}

/// Fraction of resolvable pairs whose target is within the top k.
inline double recall_at_k(const AlignmentModel& model, const EmbeddingTable& embeddings, const Catalog& catalog,
                          const std::vector<ArticulationPair>& eval_pairs, std::size_t k,
                          std::size_t* skipped = nullptr) {
    auto counts = evaluate_model(model, embeddings, catalog, eval_pairs, {k});
    if (skipped) *skipped = counts.skipped;
    if (counts.evaluated == 0) return 0.0;
    return static_cast<double>(counts.correct_at_k[k]) / static_cast<double>(counts.evaluated);
}

/// Pairs usable for training: both endpoints carry a vector.
inline std::vector<ArticulationPair> embeddable_pairs(const std::vector<ArticulationPair>& pairs,
                                                      const EmbeddingTable& embeddings) {
    std::vector<ArticulationPair> out;
    for (const auto& p : pairs)
        if (embeddings.contains(p.source_course_id) && embeddings.contains(p.target_course_id)) out.push_back(p);
    return out;
}

/// Trains on k−1 folds and evaluates the held-out fold, k times; recall is
/// pooled as total hits over total evaluated pairs.
inline EvalReport cross_validate(const Catalog& catalog, const EmbeddingTable& embeddings,
                                 const std::vector<ArticulationPair>& pairs, const SsaConfig& cfg, int k_folds = 5,
                                 std::vector<std::size_t> ks = {1, 5}) {
    const auto folds = make_folds(pairs, k_folds, cfg.seed);
    EvalReport report;
    report.ks = ks;
    for (auto k : ks) report.correct_at_k[k] = 0;
    for (int f = 0; f < k_folds; ++f) {
        std::vector<ArticulationPair> train, eval;
        for (std::size_t i = 0; i < pairs.size(); ++i) (folds.fold_of[i] == f ? eval : train).push_back(pairs[i]);
        train = embeddable_pairs(train, embeddings);

        FoldSummary fs;
        fs.fold = f;
        fs.train_pairs = train.size();
        AlignmentModel model = AlignmentModel::identity(embeddings.dim, catalog);
        if (cfg.epochs > 0 && !train.empty()) {
            model = train_ssa(embeddings, train, catalog, cfg);
        } else if (!train.empty()) {
            model.final_loss = alignment_loss(model, embeddings, train, catalog);
        }
        fs.final_loss = model.final_loss;
        fs.epochs_run = model.epochs_run;

        auto counts = evaluate_model(model, embeddings, catalog, eval, ks);
        fs.evaluated = counts.evaluated;
        fs.skipped = counts.skipped;
        fs.correct_at_k = counts.correct_at_k;
        report.total += counts.evaluated;
        report.skipped += counts.skipped;
        for (auto k : ks) report.correct_at_k[k] += counts.correct_at_k[k];
        report.per_fold.push_back(std::move(fs));
    }
    return report;
}

} // namespace articulate
