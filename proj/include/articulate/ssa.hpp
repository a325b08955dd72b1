#pragma once

// Shared space alignment: one orthogonal matrix per institution, trained so
// that x_i·M_i·M_jᵀ lands on x_j for every established pair i -> j.
// Row-vector notation x·M is stored as Mᵀ·x on Eigen column vectors.

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"
#include "articulate/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace articulate {

struct SsaConfig {
    double learning_rate = 1.0;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    std::size_t reorthogonalize_every = 1;
    double convergence_tol = 1e-5;
    std::uint64_t seed = 42;
    bool symmetrize = false; // also train on target -> source

    void validate() const {
        ARTICULATE_REQUIRE(learning_rate > 0.0 && batch_size > 0 && reorthogonalize_every >= 1 &&
                               convergence_tol >= 0.0,
                           ErrorCode::InvalidConfig, "SSA hyperparameters must be positive");
    }
};

struct AlignmentModel {
    std::size_t dim = 0;
    std::map<std::string, Matrix> matrices;
    // training metadata
    std::uint64_t seed = 0;
    std::size_t training_pairs = 0;
    std::size_t epochs_run = 0;
    std::string trained_on;
    std::vector<double> loss_history; // entry 0 is the loss before the first update; rejected epochs are not recorded
    double final_loss = 0.0;

    const Matrix& matrix(const std::string& institution) const {
        auto it = matrices.find(institution);
        ARTICULATE_REQUIRE(it != matrices.end(), ErrorCode::UnknownInstitution,
                           "model has no matrix for institution '" + institution + "'");
        return it->second;
    }

    double max_orthogonality_error() const {
        double worst = 0.0;
        for (const auto& [id, m] : matrices) worst = std::max(worst, orthogonality_error(m));
        return worst;
    }

    static AlignmentModel identity(std::size_t dim, const Catalog& catalog) {
        AlignmentModel model;
        model.dim = dim;
        const auto n = static_cast<Eigen::Index>(dim);
        for (const auto& [id, inst] : catalog.institutions()) model.matrices.emplace(id, Matrix::Identity(n, n));
        return model;
    }
};

/// ‖x_i·M_i·M_jᵀ − x_j‖² for one pair.
inline double pair_loss(const Vector& xi, const Vector& xj, const Matrix& mi, const Matrix& mj) {
    return (mj * (mi.transpose() * xi) - xj).squaredNorm();
}

struct PairGradient {
    Matrix d_source; // ∂loss/∂M_i
    Matrix d_target; // ∂loss/∂M_j
};

/// Unconstrained Euclidean gradient of pair_loss. With r = x_i·M_i·M_jᵀ − x_j
/// and p = x_i·M_i: ∂/∂M_i = 2·x_iᵀ·(r·M_j), ∂/∂M_j = 2·rᵀ·p. When the pair is
/// within one institution the caller adds both terms to the same matrix.
inline PairGradient pair_loss_gradient(const Vector& xi, const Vector& xj, const Matrix& mi, const Matrix& mj) {
    const Vector p = mi.transpose() * xi;
    const Vector r = mj * p - xj;
    return {2.0 * xi * (mj.transpose() * r).transpose(), 2.0 * r * p.transpose()};
}

namespace detail {

struct ResolvedPair {
    std::size_t source_inst;
    std::size_t target_inst;
    const Vector* source;
    const Vector* target;
};

inline std::vector<ResolvedPair> resolve_pairs(const EmbeddingTable& embeddings,
                                               const std::vector<ArticulationPair>& pairs, const Catalog& catalog,
                                               const std::map<std::string, std::size_t>& inst_index,
                                               bool symmetrize) {
    std::vector<ResolvedPair> out;
    out.reserve(pairs.size() * (symmetrize ? 2 : 1));
    for (const auto& p : pairs) {
        const Vector& xs = embeddings.at(p.source_course_id);
        const Vector& xt = embeddings.at(p.target_course_id);
        std::size_t si = inst_index.at(catalog.institution_of(p.source_course_id));
        std::size_t ti = inst_index.at(catalog.institution_of(p.target_course_id));
        out.push_back({si, ti, &xs, &xt});
        if (symmetrize) out.push_back({ti, si, &xt, &xs});
    }
    return out;
}

inline double mean_loss(const std::vector<ResolvedPair>& pairs, const std::vector<Matrix>& m) {
    double sum = 0.0;
    for (const auto& p : pairs) sum += pair_loss(*p.source, *p.target, m[p.source_inst], m[p.target_inst]);
    return pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
}

} // namespace detail

/// Mini-batch gradient descent from the identity, projecting every matrix
/// back onto the orthogonal group after each step (or every
/// reorthogonalize_every steps, and always at the end).
inline AlignmentModel train_ssa(const EmbeddingTable& embeddings, const std::vector<ArticulationPair>& pairs,
                                const Catalog& catalog, const SsaConfig& cfg) {
    cfg.validate();
    ARTICULATE_REQUIRE(!pairs.empty(), ErrorCode::NoPairs, "SSA needs at least one training pair");
    ARTICULATE_REQUIRE(embeddings.dim > 0, ErrorCode::DimensionMismatch, "embedding table has dimension 0");

    std::vector<std::string> inst_ids;
    std::map<std::string, std::size_t> inst_index;
    for (const auto& [id, inst] : catalog.institutions()) {
        inst_index.emplace(id, inst_ids.size());
        inst_ids.push_back(id);
    }
    const auto resolved = detail::resolve_pairs(embeddings, pairs, catalog, inst_index, cfg.symmetrize);

    const auto d = static_cast<Eigen::Index>(embeddings.dim);
    std::vector<Matrix> m(inst_ids.size(), Matrix::Identity(d, d));
    std::vector<Matrix> grad(inst_ids.size(), Matrix::Zero(d, d));
    std::vector<char> touched(inst_ids.size(), 0);

    AlignmentModel model;
    model.dim = embeddings.dim;
    model.seed = cfg.seed;
    model.training_pairs = resolved.size();
    model.loss_history.push_back(detail::mean_loss(resolved, m));

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(resolved.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t steps = 0;
    bool pending_projection = false;

    auto project_all = [&] {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = nearest_orthogonal(m[i]);
        pending_projection = false;
    };

    std::vector<Matrix> previous;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        previous = m;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            for (std::size_t b = start; b < stop; ++b) {
                const auto& p = resolved[order[b]];
                auto g = pair_loss_gradient(*p.source, *p.target, m[p.source_inst], m[p.target_inst]);
                grad[p.source_inst] += g.d_source;
                grad[p.target_inst] += g.d_target;
                touched[p.source_inst] = touched[p.target_inst] = 1;
            }
            const double scale = cfg.learning_rate / static_cast<double>(stop - start);
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (!touched[i]) continue;
                m[i] -= scale * grad[i];
                grad[i].setZero();
                touched[i] = 0;
            }
            pending_projection = true;
            if (++steps % cfg.reorthogonalize_every == 0) project_all();
        }
        if (pending_projection) project_all();
        ++model.epochs_run;
        const double prev = model.loss_history.back();
        const double loss = detail::mean_loss(resolved, m);
        if (loss > prev) {
            // An epoch that made things worse is undone and ends training.
            m = std::move(previous);
            break;
        }
        model.loss_history.push_back(loss);
        if (prev <= 0.0 || (prev - loss) < cfg.convergence_tol * prev) break;
    }

    model.final_loss = model.loss_history.back();
    for (std::size_t i = 0; i < m.size(); ++i) model.matrices.emplace(inst_ids[i], std::move(m[i]));
    return model;
}

/// x_c·M_i for every course c at institution i.
inline EmbeddingTable encode_shared(const AlignmentModel& model, const EmbeddingTable& table,
                                    const Catalog& catalog) {
    ARTICULATE_REQUIRE(table.dim == model.dim, ErrorCode::DimensionMismatch,
                       "table dimension " + std::to_string(table.dim) + " != model dimension " +
                           std::to_string(model.dim));
    EmbeddingTable out;
    out.dim = table.dim;
    out.provenance = Provenance::shared;
    for (const auto& [id, v] : table.vectors) {
        const Matrix& mi = model.matrix(catalog.institution_of(id));
        out.vectors.emplace(id, mi.transpose() * v);
    }
    return out;
}

/// x·M_from·M_toᵀ
inline Vector decode_to(const AlignmentModel& model, const Vector& x, const std::string& from,
                        const std::string& to) {
    const Matrix& mi = model.matrix(from);
    const Matrix& mj = model.matrix(to);
    ARTICULATE_REQUIRE(static_cast<std::size_t>(x.size()) == model.dim, ErrorCode::DimensionMismatch,
                       "vector length does not match model dimension");
    return mj * (mi.transpose() * x);
}

inline double alignment_loss(const AlignmentModel& model, const EmbeddingTable& embeddings,
                             const std::vector<ArticulationPair>& pairs, const Catalog& catalog) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : pairs) {
        const Vector& xs = embeddings.at(p.source_course_id);
        const Vector& xt = embeddings.at(p.target_course_id);
        sum += pair_loss(xs, xt, model.matrix(catalog.institution_of(p.source_course_id)),
                         model.matrix(catalog.institution_of(p.target_course_id)));
    }
    return sum / static_cast<double>(pairs.size());
}

} // namespace articulate
