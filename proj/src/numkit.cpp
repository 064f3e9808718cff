#include "ddpc/numkit.hpp"

#include <cmath>

#include "ddpc/errors.hpp"

namespace ddpc::numkit {

bool is_finite(const Matrix& A) {
    return A.allFinite();
}

Matrix SvdFactors::reconstruct() const {
    return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
}

SvdFactors svd(const Matrix& A, double rank_tol) {
    if (!is_finite(A)) {
        throw InvalidInputError("svd: matrix has non-finite entries");
    }
    if (rank_tol <= 0.0) {
        rank_tol = default_rank_tol(A.rows(), A.cols());
    }
    Eigen::BDCSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);

    SvdFactors out;
    out.left_vectors = dec.matrixU();
    out.singular_values = dec.singularValues();
    out.right_vectors = dec.matrixV();

    const Index k = out.singular_values.size();
    if (k > 0) {
        const double cutoff = rank_tol * out.singular_values(0);
        Index r = 0;
        while (r < k && out.singular_values(r) > cutoff && out.singular_values(r) > 0.0) ++r;
        out.numerical_rank = r;
    }
    return out;
}

Matrix pinv(const Matrix& A, double rank_tol) {
    const SvdFactors f = svd(A, rank_tol);
    const Index r = f.numerical_rank;
    if (r == 0) {
        return Matrix::Zero(A.cols(), A.rows());
    }
    return f.right_vectors.leftCols(r) *
           f.singular_values.head(r).cwiseInverse().asDiagonal() *
           f.left_vectors.leftCols(r).transpose();
}

RangeProjector range_projector(const Matrix& A, double rank_tol) {
    const SvdFactors f = svd(A, rank_tol);
    const Index r = f.numerical_rank;
    RangeProjector out;
    // A+ A = V_r V_r^T; building it from the factors keeps it exactly
    // symmetric and idempotent up to one matrix product.
    out.projector = f.right_vectors.leftCols(r) * f.right_vectors.leftCols(r).transpose();
    out.basis = f.left_vectors.leftCols(r);
    return out;
}

Matrix LqBlocks::lower_triangular() const {
    const Index m1 = L11.rows(), m2 = L22.rows(), m3 = L33.rows();
    Matrix L = Matrix::Zero(m1 + m2 + m3, m1 + m2 + m3);
    L.topLeftCorner(m1, m1) = L11;
    L.block(m1, 0, m2, m1) = L21;
    L.block(m1, m1, m2, m2) = L22;
    L.block(m1 + m2, 0, m3, m1) = L31;
    L.block(m1 + m2, m1, m3, m2) = L32;
    L.bottomRightCorner(m3, m3) = L33;
    return L;
}

Matrix LqBlocks::orthonormal_rows() const {
    Matrix Q(Q1.rows() + Q2.rows() + Q3.rows(), Q1.cols());
    Q << Q1, Q2, Q3;
    return Q;
}

LqBlocks lq_decompose(const Matrix& Z, const Matrix& U, const Matrix& Y) {
    if (!is_finite(Z) || !is_finite(U) || !is_finite(Y)) {
        throw InvalidInputError("lq_decompose: non-finite entries");
    }
    const Index n = Z.cols();
    if (U.cols() != n || Y.cols() != n) {
        throw InvalidInputError("lq_decompose: blocks must have equal column counts");
    }
    const Index m1 = Z.rows(), m2 = U.rows(), m3 = Y.rows();
    const Index m = m1 + m2 + m3;

    Matrix A(m, n);
    A << Z, U, Y;

    // A^T = Q_full R  =>  A = R^T Q_full^T = L Q.
    Eigen::HouseholderQR<Matrix> qr(A.transpose());
    Matrix thinQ = qr.householderQ() * Matrix::Identity(n, std::min(m, n));
    Matrix R = qr.matrixQR().topRows(std::min(m, n)).triangularView<Eigen::Upper>();

    Matrix L = Matrix::Zero(m, m);
    Matrix Q = Matrix::Zero(m, n);
    const Index k = std::min(m, n);
    L.leftCols(k) = R.transpose();
    Q.topRows(k) = thinQ.transpose();

    // Sign convention: diag(L) >= 0.
    for (Index i = 0; i < k; ++i) {
        if (L(i, i) < 0.0) {
            L.col(i) = -L.col(i);
            Q.row(i) = -Q.row(i);
        }
    }

    LqBlocks out;
    out.L11 = L.topLeftCorner(m1, m1);
    out.L21 = L.block(m1, 0, m2, m1);
    out.L22 = L.block(m1, m1, m2, m2);
    out.L31 = L.block(m1 + m2, 0, m3, m1);
    out.L32 = L.block(m1 + m2, m1, m3, m2);
    out.L33 = L.bottomRightCorner(m3, m3);
    out.Q1 = Q.topRows(m1);
    out.Q2 = Q.middleRows(m1, m2);
    out.Q3 = Q.bottomRows(m3);

    // Diagonal-block invertibility, judged against the data scale.
    const double scale = std::max(1e-300, A.norm());
    double min_diag = (n < m) ? 0.0 : L.diagonal().minCoeff();
    out.degenerate = (n < m) || (min_diag <= 1e-12 * scale);
    return out;
}

double weighted_sqnorm(const Vector& x, const Matrix& W) {
    if (W.rows() != W.cols() || W.rows() != x.size()) {
        throw InvalidInputError("weighted_sqnorm: dimension mismatch");
    }
    if (!is_finite(W) || !x.allFinite()) {
        throw InvalidInputError("weighted_sqnorm: non-finite entries");
    }
    const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidInputError("weighted_sqnorm: weight matrix is not symmetric");
    }
    return x.dot(W * x);
}

} // namespace ddpc::numkit
