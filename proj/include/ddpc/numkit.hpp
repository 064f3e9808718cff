#pragma once

#include <Eigen/Dense>

namespace ddpc::numkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

bool is_finite(const Matrix& A);

// Safe even when the argument is the assignment target: the expression is
// evaluated into the returned temporary before any write-back.
inline Matrix symmetrized(const Matrix& A) {
    return 0.5 * (A + A.transpose());
}

// Relative threshold for numerical rank: singular values above
// rank_tol * sigma_max count toward the rank.
inline double default_rank_tol(Index rows, Index cols) {
    return 1e-10 * static_cast<double>(std::max(rows, cols));
}

// ============================================================================
// Rank-revealing SVD and derived operators
// ============================================================================

struct SvdFactors {
    Matrix left_vectors;     // thin U, orthonormal columns
    Vector singular_values;  // nonincreasing, nonnegative
    Matrix right_vectors;    // thin V, orthonormal columns
    Index numerical_rank = 0;

    Matrix reconstruct() const;
};

// rank_tol <= 0 selects default_rank_tol(rows, cols).
SvdFactors svd(const Matrix& A, double rank_tol = 0.0);

// Moore-Penrose pseudoinverse via truncated SVD.
Matrix pinv(const Matrix& A, double rank_tol = 0.0);

struct RangeProjector {
    Matrix projector;  // A+ A: orthogonal projector onto range(A^T)
    Matrix basis;      // orthonormal columns spanning range(A)
};

RangeProjector range_projector(const Matrix& A, double rank_tol = 0.0);

// ============================================================================
// Block LQ decomposition of a stacked data matrix [Z; U; Y]
// ============================================================================
// [Z; U; Y] = L * Q with L lower block-triangular and Q having orthonormal
// rows (Qi Qi^T = I, Qi Qj^T = 0). Computed as QR of the transpose, then
// sign-normalized so diag(L) >= 0, which pins the factorization down
// deterministically.

struct LqBlocks {
    Matrix L11, L21, L22, L31, L32, L33;
    Matrix Q1, Q2, Q3;
    // Set when a diagonal block is numerically singular (e.g. fewer columns
    // than rows); the decomposition is still returned.
    bool degenerate = false;

    Matrix lower_triangular() const;  // assembled L
    Matrix orthonormal_rows() const;  // assembled Q
};

LqBlocks lq_decompose(const Matrix& Z, const Matrix& U, const Matrix& Y);

// x^T W x for symmetric PSD W.
double weighted_sqnorm(const Vector& x, const Matrix& W);

} // namespace ddpc::numkit
