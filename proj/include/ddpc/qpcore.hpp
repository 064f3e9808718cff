#pragma once

#include <limits>

#include "ddpc/numkit.hpp"

namespace ddpc::qpcore {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ============================================================================
// Convex QP: minimize 0.5 x'Hx + f'x  s.t.  A_eq x = b_eq,  lower <= x <= upper
// ============================================================================

struct QuadProgram {
    Matrix H;     // symmetric PSD
    Vector f;
    Matrix A_eq;  // 0 rows when absent
    Vector b_eq;
    Vector lower;  // -inf allowed
    Vector upper;  // +inf allowed

    Index num_vars() const { return H.rows(); }
    void validate() const;
};

enum class QpStatus { optimal, max_iter, infeasible };

const char* to_string(QpStatus status);

struct QpSolution {
    Vector x;
    double objective = 0.0;
    double primal_residual = kInf;
    double dual_residual = kInf;
    int iterations = 0;
    QpStatus status = QpStatus::max_iter;
};

// Compact per-solve diagnostics carried by controller solutions.
struct QpDiagnostics {
    QpStatus status = QpStatus::max_iter;
    int iterations = 0;
    double primal_residual = kInf;
    double dual_residual = kInf;
    Index num_vars = 0;
};

inline QpDiagnostics summarize(const QpSolution& sol, Index num_vars) {
    return {sol.status, sol.iterations, sol.primal_residual, sol.dual_residual, num_vars};
}

// Operator-splitting solve with fixed penalty, over-relaxation, and an
// active-set polish pass. Equalities are eliminated by a null-space
// parameterization first, so the iteration runs in the reduced space.
// Deterministic given inputs.
QpSolution solve_qp(const QuadProgram& program, double tol = 1e-9, int max_iter = 50000);

} // namespace ddpc::qpcore
