#include <doctest.h>

#include <Eigen/Dense>

#include "ddpc/errors.hpp"
#include "ddpc/numkit.hpp"
#include "ddpc/rng.hpp"

using namespace ddpc;
using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

namespace {

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
    Matrix A(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) A(i, j) = rng.gaussian();
    }
    return A;
}

} // namespace

TEST_SUITE_BEGIN("numkit");

TEST_CASE("pinv: identity and diagonal truncation") {
    CHECK((numkit::pinv(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);

    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 2.0;
    const Matrix Dp = numkit::pinv(D);
    CHECK(Dp(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(Dp(1, 1)) < 1e-14);
    CHECK(std::abs(Dp(0, 1)) < 1e-14);
}

TEST_CASE("pinv: four Penrose conditions on random rectangular matrices") {
    Rng rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix A = random_matrix(rng, 4, 6);
        const Matrix Ap = numkit::pinv(A);
        const double scale = A.norm();
        CHECK((A * Ap * A - A).norm() < 1e-9 * scale);
        CHECK((Ap * A * Ap - Ap).norm() < 1e-9 * Ap.norm());
        CHECK(((A * Ap) - (A * Ap).transpose()).norm() < 1e-9);
        CHECK(((Ap * A) - (Ap * A).transpose()).norm() < 1e-9);
    }
}

TEST_CASE("pinv is an involution: pinv(pinv(A)) = A") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix A = random_matrix(rng, 5, 3);
        CHECK((numkit::pinv(numkit::pinv(A)) - A).norm() < 1e-9 * (1.0 + A.norm()));
    }
}

TEST_CASE("pinv rejects non-finite input") {
    Matrix A = Matrix::Ones(2, 2);
    A(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(numkit::pinv(A), InvalidInputError);
}

TEST_CASE("range_projector: hand-computed 1x2 case") {
    // A = [1 1]: A+ = [0.5; 0.5], so A+A = [[.5,.5],[.5,.5]].
    Matrix A(1, 2);
    A << 1.0, 1.0;
    const auto rp = numkit::range_projector(A);
    Matrix expected(2, 2);
    expected << 0.5, 0.5, 0.5, 0.5;
    CHECK((rp.projector - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(rp.basis.rows() == 1);
    CHECK(rp.basis.cols() == 1);
    CHECK(std::abs(std::abs(rp.basis(0, 0)) - 1.0) < 1e-14);
}

TEST_CASE("range_projector: full rank and zero cases") {
    Rng rng(11);
    Matrix A = random_matrix(rng, 4, 4);
    A.diagonal().array() += 3.0;  // keep it comfortably invertible
    const auto rp = numkit::range_projector(A);
    CHECK((rp.projector - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);

    const auto rz = numkit::range_projector(Matrix::Zero(3, 5));
    CHECK(rz.projector.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rz.basis.cols() == 0);
}

TEST_CASE("projector idempotence and symmetry on random ranks") {
    Rng rng(13);
    for (int trial = 0; trial < 8; ++trial) {
        const Index rows = 2 + static_cast<Index>(rng.next_u64() % 5);
        const Index cols = 2 + static_cast<Index>(rng.next_u64() % 5);
        const Index rank = 1 + static_cast<Index>(rng.next_u64() %
                                                  static_cast<std::uint64_t>(
                                                      std::min(rows, cols)));
        const Matrix A = random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols);
        const Matrix P = numkit::range_projector(A).projector;
        CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("svd reconstructs and ranks correctly") {
    Rng rng(17);
    const Matrix A = random_matrix(rng, 6, 3) * random_matrix(rng, 3, 8);
    const auto f = numkit::svd(A);
    CHECK(f.numerical_rank == 3);
    CHECK((f.reconstruct() - A).norm() < 1e-10 * f.singular_values(0));
    for (Index i = 1; i < f.singular_values.size(); ++i) {
        CHECK(f.singular_values(i) <= f.singular_values(i - 1));
    }
}

TEST_CASE("lq_decompose: orthogonal rows give diagonal L") {
    Matrix Z(1, 4), U(1, 4), Y(1, 4);
    Z << 1, 1, 1, 1;
    U << 1, -1, 1, -1;
    Y << 1, 1, -1, -1;
    const auto lq = numkit::lq_decompose(Z, U, Y);
    CHECK_FALSE(lq.degenerate);
    CHECK(std::abs(lq.L11(0, 0) - 2.0) < 1e-12);
    CHECK(std::abs(lq.L22(0, 0) - 2.0) < 1e-12);
    CHECK(std::abs(lq.L33(0, 0) - 2.0) < 1e-12);
    CHECK(std::abs(lq.L21(0, 0)) < 1e-12);
    CHECK(std::abs(lq.L31(0, 0)) < 1e-12);
    CHECK(std::abs(lq.L32(0, 0)) < 1e-12);
}

TEST_CASE("lq_decompose reconstructs the stacked data") {
    Rng rng(19);
    const Matrix Z = random_matrix(rng, 4, 30);
    const Matrix U = random_matrix(rng, 3, 30);
    const Matrix Y = random_matrix(rng, 5, 30);
    const auto lq = numkit::lq_decompose(Z, U, Y);
    CHECK_FALSE(lq.degenerate);

    Matrix A(12, 30);
    A << Z, U, Y;
    const Matrix recon = lq.lower_triangular() * lq.orthonormal_rows();
    CHECK((recon - A).norm() < 1e-10 * A.norm());

    // Orthonormal rows, mutually orthogonal blocks.
    const Matrix Q = lq.orthonormal_rows();
    CHECK((Q * Q.transpose() - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);

    // Sign convention: nonnegative diagonal.
    CHECK(lq.lower_triangular().diagonal().minCoeff() >= 0.0);
}

TEST_CASE("lq_decompose: L33 L33' equals the scaled residual covariance") {
    Rng rng(23);
    const Index n = 40;
    const Matrix Z = random_matrix(rng, 3, n);
    const Matrix U = random_matrix(rng, 4, n);
    Matrix Phi(7, n);
    Phi << Z, U;
    // Outputs correlated with the regressors plus noise.
    const Matrix Y = random_matrix(rng, 2, 7) * Phi + 0.3 * random_matrix(rng, 2, n);

    const auto lq = numkit::lq_decompose(Z, U, Y);
    const Matrix theta = Y * numkit::pinv(Phi);
    const Matrix E = Y - theta * Phi;
    const Matrix n_sigma_delta = E * E.transpose();
    const Matrix lhs = lq.L33 * lq.L33.transpose();
    CHECK((lhs - n_sigma_delta).norm() < 1e-8 * n_sigma_delta.norm());
}

TEST_CASE("lq_decompose flags degenerate stacks") {
    Rng rng(29);
    const Matrix Z = random_matrix(rng, 3, 5);
    const Matrix U = random_matrix(rng, 2, 5);
    const Matrix Y = random_matrix(rng, 2, 5);  // 7 rows > 5 columns
    CHECK(numkit::lq_decompose(Z, U, Y).degenerate);

    CHECK_THROWS_AS(numkit::lq_decompose(Z, U, random_matrix(rng, 2, 6)), InvalidInputError);
}

TEST_CASE("weighted_sqnorm basics") {
    Vector x(2);
    x << 1.0, 2.0;
    CHECK(numkit::weighted_sqnorm(x, Matrix::Identity(2, 2)) == doctest::Approx(5.0));
    CHECK(numkit::weighted_sqnorm(x, Matrix::Zero(2, 2)) == 0.0);

    // x in the null space of W = v v' with v orthogonal to x.
    Vector v(2);
    v << 2.0, -1.0;
    const Matrix W = v * v.transpose();
    CHECK(std::abs(numkit::weighted_sqnorm(x, W)) < 1e-14);

    Matrix asym(2, 2);
    asym << 1.0, 2.0, 0.0, 1.0;
    CHECK_THROWS_AS(numkit::weighted_sqnorm(x, asym), InvalidInputError);
}

TEST_CASE("weighted pseudo-inverse norm identity for x in range(A)") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Index rows = 2 + static_cast<Index>(rng.next_u64() % 5);
        const Index cols = 2 + static_cast<Index>(rng.next_u64() % 5);
        const Matrix A = random_matrix(rng, rows, cols);
        Vector v(cols);
        for (Index j = 0; j < cols; ++j) v(j) = rng.gaussian();
        const Vector x = A * v;
        const double lhs = (numkit::pinv(A) * x).squaredNorm();
        const double rhs = numkit::weighted_sqnorm(x, numkit::pinv(A * A.transpose()));
        CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(lhs)));
    }
}

TEST_SUITE_END();
