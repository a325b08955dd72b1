#pragma once

#include "articulate/embedding.hpp"
#include "articulate/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <random>

namespace articulate {

/// Frobenius distance of MᵀM from the identity.
inline double orthogonality_error(const Matrix& m) {
    return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm();
}

/// Polar projection: for M = U·S·Vᵀ returns U·Vᵀ, the orthogonal matrix
/// closest to M in Frobenius norm.
inline Matrix nearest_orthogonal(const Matrix& m, double rank_tol = 1e-12) {
    ARTICULATE_REQUIRE(m.rows() == m.cols() && m.rows() > 0, ErrorCode::DimensionMismatch,
                       "nearest_orthogonal needs a non-empty square matrix");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    ARTICULATE_REQUIRE(s(0) > 0.0 && s(s.size() - 1) > rank_tol * s(0), ErrorCode::RankDeficient,
                       "matrix is rank deficient (condition exceeds 1/" + std::to_string(rank_tol) + ")");
    return svd.matrixU() * svd.matrixV().transpose();
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q. With `proper` the last column is
/// flipped when needed so that det = +1.
template <typename Rng>
Matrix random_orthogonal(std::size_t dim, Rng& rng, bool proper = false) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix g(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) g(r, c) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < n; ++c)
        if (r(c, c) < 0) q.col(c) *= -1.0;
    if (proper && q.determinant() < 0) q.col(n - 1) *= -1.0;
    return q;
}

template <typename Rng>
Vector random_unit_vector(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(static_cast<Eigen::Index>(dim));
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

} // namespace articulate
