#pragma once

// Test-only brute-force QP oracle: enumerates every lower/upper/free pattern
// of the box (3^n for n variables), solves the equality-constrained
// subproblem for each pattern, and keeps the best feasible candidate. Exact
// for strictly convex problems with all-finite boxes; independent of the
// production solver path.

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "ddpc/qpcore.hpp"

namespace qp_oracle {

using ddpc::numkit::Index;
using ddpc::numkit::Matrix;
using ddpc::numkit::Vector;

struct OracleResult {
    Vector x;
    double objective = std::numeric_limits<double>::infinity();
    bool found = false;
};

inline OracleResult brute_force(const ddpc::qpcore::QuadProgram& p) {
    const Index n = p.num_vars();
    const Index n_eq = p.A_eq.rows();
    OracleResult best;

    long patterns = 1;
    for (Index i = 0; i < n; ++i) patterns *= 3;

    for (long code = 0; code < patterns; ++code) {
        long rem = code;
        std::vector<int> state(static_cast<std::size_t>(n));  // 0 free, 1 lower, 2 upper
        for (Index i = 0; i < n; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(rem % 3);
            rem /= 3;
        }

        std::vector<Index> free_idx;
        Vector x = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            switch (state[static_cast<std::size_t>(i)]) {
                case 0: free_idx.push_back(i); break;
                case 1: x(i) = p.lower(i); break;
                case 2: x(i) = p.upper(i); break;
            }
        }
        const Index nf = static_cast<Index>(free_idx.size());

        if (nf > 0 || n_eq > 0) {
            // Stationarity over the free block subject to the equalities.
            Matrix K = Matrix::Zero(nf + n_eq, nf + n_eq);
            Vector rhs = Vector::Zero(nf + n_eq);
            for (Index a = 0; a < nf; ++a) {
                for (Index b = 0; b < nf; ++b) K(a, b) = p.H(free_idx[a], free_idx[b]);
                double g = p.f(free_idx[a]);
                for (Index i = 0; i < n; ++i) {
                    if (state[static_cast<std::size_t>(i)] != 0) {
                        g += p.H(free_idx[a], i) * x(i);
                    }
                }
                rhs(a) = -g;
            }
            for (Index e = 0; e < n_eq; ++e) {
                for (Index a = 0; a < nf; ++a) {
                    K(nf + e, a) = p.A_eq(e, free_idx[a]);
                    K(a, nf + e) = p.A_eq(e, free_idx[a]);
                }
                double r = p.b_eq(e);
                for (Index i = 0; i < n; ++i) {
                    if (state[static_cast<std::size_t>(i)] != 0) r -= p.A_eq(e, i) * x(i);
                }
                rhs(nf + e) = r;
            }
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
            const Vector sol = cod.solve(rhs);
            if (!sol.allFinite()) continue;
            if ((K * sol - rhs).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
                continue;  // inconsistent pattern
            }
            for (Index a = 0; a < nf; ++a) x(free_idx[a]) = sol(a);
        }

        // Feasibility of the candidate.
        bool ok = true;
        for (Index i = 0; i < n && ok; ++i) {
            if (x(i) < p.lower(i) - 1e-10 || x(i) > p.upper(i) + 1e-10) ok = false;
        }
        if (ok && n_eq > 0) {
            ok = (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff() <=
                 1e-8 * (1.0 + p.b_eq.cwiseAbs().maxCoeff());
        }
        if (!ok) continue;

        const double obj = 0.5 * x.dot(p.H * x) + p.f.dot(x);
        if (obj < best.objective) {
            best.objective = obj;
            best.x = x;
            best.found = true;
        }
    }
    return best;
}

} // namespace qp_oracle
