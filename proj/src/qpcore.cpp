#include "ddpc/qpcore.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ddpc/errors.hpp"

namespace ddpc::qpcore {

namespace {

constexpr double kSigma = 1e-6;        // proximal regularization
constexpr double kRhoBase = 0.1;       // penalty for inequality rows
constexpr double kRhoEqScale = 1e3;    // equality rows get a stiffer penalty
constexpr double kRelaxation = 1.6;    // over-relaxation
constexpr int kCheckInterval = 10;

// Internal general form: min 0.5 v'Pv + q'v  s.t.  l <= Cv <= u.
// The public equality+box contract reduces to this after null-space
// elimination (a box on x = x_p + Zv is a two-sided constraint on Zv).
struct GeneralQp {
    Matrix P;
    Vector q;
    Matrix C;
    Vector l, u;
};

struct CoreResult {
    Vector x;
    Vector y;  // multipliers for the C rows, y <= 0 at lower, >= 0 at upper
    double r_prim = kInf;
    double r_dual = kInf;
    int iterations = 0;
    bool converged = false;
};

double inf_norm(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Minimum-norm stationary point of an unconstrained convex quadratic.
Vector unconstrained_minimizer(const Matrix& P, const Vector& q, bool& ok) {
    Eigen::LDLT<Matrix> ldlt(P);
    if (ldlt.info() == Eigen::Success) {
        Vector x = ldlt.solve(-q);
        if (x.allFinite() && inf_norm(P * x + q) <= 1e-10 * (1.0 + inf_norm(q))) {
            ok = true;
            return x;
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(P);
    Vector x = cod.solve(-q);
    ok = x.allFinite() && inf_norm(P * x + q) <= 1e-8 * (1.0 + inf_norm(q));
    return x;
}

// Equality-constrained refinement on a guessed active set. Returns the
// candidate only if it satisfies the full KKT conditions at `tol`. A
// rank-revealing solve keeps redundant active rows harmless and picks the
// minimum-norm multiplier/iterate pair in degenerate cases.
std::optional<CoreResult> polish(const GeneralQp& g, const CoreResult& guess, double tol) {
    const Index n = g.P.rows();
    const Index m = g.C.rows();

    std::vector<Index> active;
    std::vector<int> side(static_cast<std::size_t>(m), 0);  // -1 lower, +1 upper
    const Vector cx = g.C * guess.x;
    for (Index i = 0; i < m; ++i) {
        const bool is_eq = (g.u(i) - g.l(i)) <= 1e-14 * (1.0 + std::abs(g.l(i)));
        const double prox_l = 1e-6 * (1.0 + std::abs(g.l(i)));
        const double prox_u = 1e-6 * (1.0 + std::abs(g.u(i)));
        if (is_eq) {
            side[static_cast<std::size_t>(i)] = -1;
            active.push_back(i);
        } else if (std::isfinite(g.l(i)) &&
                   (guess.y(i) < -1e-12 || cx(i) - g.l(i) < prox_l)) {
            side[static_cast<std::size_t>(i)] = -1;
            active.push_back(i);
        } else if (std::isfinite(g.u(i)) &&
                   (guess.y(i) > 1e-12 || g.u(i) - cx(i) < prox_u)) {
            side[static_cast<std::size_t>(i)] = 1;
            active.push_back(i);
        }
    }

    const Index ma = static_cast<Index>(active.size());
    Vector x(n), nu(ma);
    if (ma == 0) {
        bool ok = false;
        x = unconstrained_minimizer(g.P, g.q, ok);
        if (!ok) return std::nullopt;
    } else {
        Matrix K = Matrix::Zero(n + ma, n + ma);
        K.topLeftCorner(n, n) = g.P;
        Vector rhs(n + ma);
        rhs.head(n) = -g.q;
        for (Index a = 0; a < ma; ++a) {
            const Index i = active[static_cast<std::size_t>(a)];
            K.block(n + a, 0, 1, n) = g.C.row(i);
            K.block(0, n + a, n, 1) = g.C.row(i).transpose();
            rhs(n + a) = (side[static_cast<std::size_t>(i)] < 0) ? g.l(i) : g.u(i);
        }
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
        Vector sol = cod.solve(rhs);
        // Two rounds of iterative refinement sharpen the KKT residual.
        for (int pass = 0; pass < 2; ++pass) {
            sol += cod.solve(rhs - K * sol);
        }
        if (!sol.allFinite()) return std::nullopt;
        x = sol.head(n);
        nu = sol.tail(ma);
    }

    // KKT verification on the original problem.
    const double q_scale = 1.0 + inf_norm(g.q) + inf_norm(g.P * x);
    Vector y_full = Vector::Zero(m);
    for (Index a = 0; a < ma; ++a) {
        y_full(active[static_cast<std::size_t>(a)]) = nu(a);
    }
    const double stat = inf_norm(g.P * x + g.q + g.C.transpose() * y_full);
    if (stat > tol * q_scale) return std::nullopt;

    const Vector cx_new = g.C * x;
    double prim = 0.0;
    for (Index i = 0; i < m; ++i) {
        const double scale = 1.0 + std::max(std::abs(g.l(i)), std::isfinite(g.u(i))
                                                                  ? std::abs(g.u(i))
                                                                  : 0.0);
        double viol = 0.0;
        if (std::isfinite(g.l(i))) viol = std::max(viol, g.l(i) - cx_new(i));
        if (std::isfinite(g.u(i))) viol = std::max(viol, cx_new(i) - g.u(i));
        if (viol > tol * scale) return std::nullopt;
        prim = std::max(prim, viol);
    }
    for (Index i = 0; i < m; ++i) {
        const bool is_eq = (g.u(i) - g.l(i)) <= 1e-14 * (1.0 + std::abs(g.l(i)));
        if (is_eq || side[static_cast<std::size_t>(i)] == 0) continue;
        const double sign_tol = 1e-8 * q_scale;
        if (side[static_cast<std::size_t>(i)] < 0 && y_full(i) > sign_tol) return std::nullopt;
        if (side[static_cast<std::size_t>(i)] > 0 && y_full(i) < -sign_tol) return std::nullopt;
    }

    CoreResult out;
    out.x = x;
    out.y = y_full;
    out.r_prim = prim;
    out.r_dual = stat;
    out.iterations = guess.iterations;
    out.converged = true;
    return out;
}

CoreResult solve_general(const GeneralQp& g0, double tol, int max_iter) {
    const Index n = g0.P.rows();
    const Index m = g0.C.rows();

    if (m == 0) {
        CoreResult out;
        bool ok = false;
        out.x = unconstrained_minimizer(g0.P, g0.q, ok);
        out.y = Vector();
        out.r_prim = 0.0;
        out.r_dual = inf_norm(g0.P * out.x + g0.q);
        out.converged = ok;
        return out;
    }

    // Scaling: normalize the cost magnitude and equilibrate constraint rows.
    GeneralQp g = g0;
    const double cost_mag =
        std::max({1.0, g.P.cwiseAbs().maxCoeff(), inf_norm(g.q)});
    const double c = 1.0 / cost_mag;
    g.P *= c;
    g.q *= c;
    Vector row_scale(m);
    for (Index i = 0; i < m; ++i) {
        row_scale(i) = 1.0 / std::max(1e-6, g.C.row(i).cwiseAbs().maxCoeff());
    }
    g.C = row_scale.asDiagonal() * g.C;
    for (Index i = 0; i < m; ++i) {
        g.l(i) = std::isfinite(g.l(i)) ? g.l(i) * row_scale(i) : g.l(i);
        g.u(i) = std::isfinite(g.u(i)) ? g.u(i) * row_scale(i) : g.u(i);
    }

    Vector rho(m);
    for (Index i = 0; i < m; ++i) {
        const bool is_eq =
            std::isfinite(g.l(i)) && std::isfinite(g.u(i)) &&
            (g.u(i) - g.l(i)) <= 1e-14 * (1.0 + std::abs(g.l(i)));
        rho(i) = is_eq ? kRhoBase * kRhoEqScale : kRhoBase;
    }

    auto factor_kkt = [&](const Vector& rho_vec) {
        Matrix K = Matrix::Zero(n + m, n + m);
        K.topLeftCorner(n, n) = g.P;
        K.topLeftCorner(n, n).diagonal().array() += kSigma;
        K.topRightCorner(n, m) = g.C.transpose();
        K.bottomLeftCorner(m, n) = g.C;
        K.bottomRightCorner(m, m).diagonal() = -rho_vec.cwiseInverse();
        return Eigen::PartialPivLU<Matrix>(K);
    };
    Eigen::PartialPivLU<Matrix> kkt = factor_kkt(rho);

    Vector x = Vector::Zero(n);
    Vector z = Vector::Zero(m);
    Vector y = Vector::Zero(m);
    for (Index i = 0; i < m; ++i) {
        if (std::isfinite(g.l(i))) z(i) = std::max(z(i), g.l(i));
        if (std::isfinite(g.u(i))) z(i) = std::min(z(i), g.u(i));
    }

    CoreResult best;
    best.x = x;
    best.y = y;

    Vector rhs(n + m), sol(n + m);
    int last_polish = -1000;
    int refactor_count = 0;

    for (int it = 1; it <= max_iter; ++it) {
        rhs.head(n) = kSigma * x - g.q;
        rhs.tail(m) = z - y.cwiseQuotient(rho);
        sol = kkt.solve(rhs);
        const auto x_tilde = sol.head(n);
        Vector z_tilde = z + (sol.tail(m) - y).cwiseQuotient(rho);

        x = kRelaxation * x_tilde + (1.0 - kRelaxation) * x;
        Vector z_relaxed = kRelaxation * z_tilde + (1.0 - kRelaxation) * z;
        Vector z_next = z_relaxed + y.cwiseQuotient(rho);
        for (Index i = 0; i < m; ++i) {
            if (std::isfinite(g.l(i))) z_next(i) = std::max(z_next(i), g.l(i));
            if (std::isfinite(g.u(i))) z_next(i) = std::min(z_next(i), g.u(i));
        }
        y += rho.cwiseProduct(z_relaxed - z_next);
        z = z_next;

        if (it % kCheckInterval != 0 && it != max_iter) continue;

        // Residuals in the original (unscaled) problem.
        Vector y_true = (row_scale.cwiseProduct(y)) / c;
        Vector z_true = z.cwiseQuotient(row_scale);
        const Vector cx = g0.C * x;
        const double rp = inf_norm(cx - z_true);
        const double rd = inf_norm(g0.P * x + g0.q + g0.C.transpose() * y_true);
        const double p_scale =
            1.0 + std::max(inf_norm(cx), inf_norm(z_true));
        const double d_scale = 1.0 + std::max({inf_norm(g0.P * x), inf_norm(g0.q),
                                               inf_norm(g0.C.transpose() * y_true)});

        best.x = x;
        best.y = y_true;
        best.r_prim = rp;
        best.r_dual = rd;
        best.iterations = it;

        const bool converged = rp <= tol * p_scale && rd <= tol * d_scale;
        const bool can_polish =
            (rp <= 1e-4 * p_scale && rd <= 1e-4 * d_scale && it - last_polish >= 250) ||
            converged || it == max_iter;
        if (can_polish) {
            last_polish = it;
            if (auto refined = polish(g0, best, std::max(tol, 1e-12))) {
                return *refined;
            }
        }
        if (converged) {
            best.converged = true;
            return best;
        }

        // Penalty re-balancing when the residuals drift apart.
        if (it % 200 == 0 && refactor_count < 20) {
            const double rp_rel = rp / p_scale;
            const double rd_rel = rd / d_scale;
            const double ratio = std::sqrt(rp_rel / std::max(rd_rel, 1e-16));
            if (ratio > 5.0 || ratio < 0.2) {
                const double factor = std::clamp(ratio, 0.1, 10.0);
                rho *= factor;
                for (Index i = 0; i < m; ++i) {
                    rho(i) = std::clamp(rho(i), 1e-6, 1e7);
                }
                kkt = factor_kkt(rho);
                ++refactor_count;
            }
        }
    }
    return best;
}

struct BoxRow {
    Index var;
    double lo, hi;
};

std::vector<BoxRow> finite_box_rows(const Vector& lower, const Vector& upper) {
    std::vector<BoxRow> rows;
    for (Index i = 0; i < lower.size(); ++i) {
        if (std::isfinite(lower(i)) || std::isfinite(upper(i))) {
            rows.push_back({i, lower(i), upper(i)});
        }
    }
    return rows;
}

bool within_box(const Vector& x, const Vector& lower, const Vector& upper, double tol) {
    for (Index i = 0; i < x.size(); ++i) {
        const double scale = 1.0 + std::abs(x(i));
        if (std::isfinite(lower(i)) && x(i) < lower(i) - tol * scale) return false;
        if (std::isfinite(upper(i)) && x(i) > upper(i) + tol * scale) return false;
    }
    return true;
}

// Phase-1 probe: minimal equality violation over the box. Distinguishes
// "infeasible" from "slow" when the main iteration hits the cap.
bool equality_system_feasible(const QuadProgram& p, double tol, int max_iter) {
    GeneralQp g;
    g.P = 2.0 * p.A_eq.transpose() * p.A_eq;
    g.q = -2.0 * p.A_eq.transpose() * p.b_eq;
    const auto rows = finite_box_rows(p.lower, p.upper);
    g.C = Matrix::Zero(static_cast<Index>(rows.size()), p.num_vars());
    g.l = Vector(static_cast<Index>(rows.size()));
    g.u = Vector(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        g.C(static_cast<Index>(k), rows[k].var) = 1.0;
        g.l(static_cast<Index>(k)) = rows[k].lo;
        g.u(static_cast<Index>(k)) = rows[k].hi;
    }
    CoreResult res = solve_general(g, std::max(tol, 1e-9), max_iter);
    const double gap = inf_norm(p.A_eq * res.x - p.b_eq);
    return gap <= 1e-6 * (1.0 + inf_norm(p.b_eq));
}

} // namespace

const char* to_string(QpStatus status) {
    switch (status) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::max_iter: return "max_iter";
        case QpStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

void QuadProgram::validate() const {
    const Index n = H.rows();
    if (H.cols() != n || f.size() != n || lower.size() != n || upper.size() != n) {
        throw InvalidInputError("QuadProgram: dimension mismatch");
    }
    if (!numkit::is_finite(H) || !f.allFinite()) {
        throw InvalidInputError("QuadProgram: non-finite cost");
    }
    if (A_eq.rows() > 0 &&
        (A_eq.cols() != n || b_eq.size() != A_eq.rows() || !numkit::is_finite(A_eq) ||
         !b_eq.allFinite())) {
        throw InvalidInputError("QuadProgram: bad equality block");
    }
    const double h_scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * h_scale) {
        throw InvalidInputError("QuadProgram: H is not symmetric");
    }
    for (Index i = 0; i < n; ++i) {
        if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i)) {
            throw InvalidInputError("QuadProgram: empty or NaN box at index " +
                                    std::to_string(i));
        }
    }

    // PSD guard. Small problems get an exact eigenvalue check; large ones a
    // shifted Cholesky probe.
    if (n <= 600) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-8 * h_scale) {
            throw InvalidInputError("QuadProgram: H is not positive semidefinite");
        }
    } else {
        Matrix shifted = H;
        shifted.diagonal().array() += 1e-8 * h_scale;
        Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() != Eigen::Success) {
            throw InvalidInputError("QuadProgram: H is not positive semidefinite");
        }
    }
}

QpSolution solve_qp(const QuadProgram& program, double tol, int max_iter) {
    program.validate();
    if (tol <= 0.0 || max_iter < 1) {
        throw InvalidInputError("solve_qp: tol and max_iter must be positive");
    }
    const Index n = program.num_vars();

    QpSolution out;
    if (program.A_eq.rows() == 0) {
        GeneralQp g;
        g.P = numkit::symmetrized(program.H);
        g.q = program.f;
        const auto rows = finite_box_rows(program.lower, program.upper);
        g.C = Matrix::Zero(static_cast<Index>(rows.size()), n);
        g.l = Vector(static_cast<Index>(rows.size()));
        g.u = Vector(static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            g.C(static_cast<Index>(k), rows[k].var) = 1.0;
            g.l(static_cast<Index>(k)) = rows[k].lo;
            g.u(static_cast<Index>(k)) = rows[k].hi;
        }
        CoreResult res = solve_general(g, tol, max_iter);
        out.x = res.x;
        out.iterations = res.iterations;
        out.primal_residual = res.r_prim;
        out.dual_residual = res.r_dual;
        out.status = res.converged ? QpStatus::optimal : QpStatus::max_iter;
    } else {
        // Eliminate equalities: x = x_p + Z v with Z spanning null(A_eq).
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(program.A_eq);
        Vector x_p = cod.solve(program.b_eq);
        const double eq_scale = 1.0 + inf_norm(program.b_eq);
        if (inf_norm(program.A_eq * x_p - program.b_eq) > 1e-8 * eq_scale) {
            out.status = QpStatus::infeasible;
            out.x = x_p;
            out.objective = 0.5 * x_p.dot(program.H * x_p) + program.f.dot(x_p);
            out.primal_residual = inf_norm(program.A_eq * x_p - program.b_eq);
            return out;
        }
        const numkit::SvdFactors svd_eq = numkit::svd(program.A_eq);
        Eigen::BDCSVD<Matrix> full_svd(program.A_eq, Eigen::ComputeFullV);
        const Index r = svd_eq.numerical_rank;
        const Index n_free = n - r;

        if (n_free == 0) {
            out.x = x_p;
            out.iterations = 0;
            out.primal_residual = inf_norm(program.A_eq * x_p - program.b_eq);
            out.dual_residual = 0.0;
            out.status = within_box(x_p, program.lower, program.upper, tol)
                             ? QpStatus::optimal
                             : QpStatus::infeasible;
            out.objective = 0.5 * x_p.dot(program.H * x_p) + program.f.dot(x_p);
            return out;
        }

        const Matrix Z = full_svd.matrixV().rightCols(n_free);
        GeneralQp g;
        g.P = numkit::symmetrized(Z.transpose() * program.H * Z);
        g.q = Z.transpose() * (program.H * x_p + program.f);
        const auto rows = finite_box_rows(program.lower, program.upper);
        g.C = Matrix::Zero(static_cast<Index>(rows.size()), n_free);
        g.l = Vector(static_cast<Index>(rows.size()));
        g.u = Vector(static_cast<Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            g.C.row(static_cast<Index>(k)) = Z.row(rows[k].var);
            g.l(static_cast<Index>(k)) =
                std::isfinite(rows[k].lo) ? rows[k].lo - x_p(rows[k].var) : -kInf;
            g.u(static_cast<Index>(k)) =
                std::isfinite(rows[k].hi) ? rows[k].hi - x_p(rows[k].var) : kInf;
        }
        CoreResult res = solve_general(g, tol, max_iter);
        out.x = x_p + Z * res.x;
        out.iterations = res.iterations;

        // Full-space KKT residuals; the equality multiplier is recovered by
        // least squares.
        Vector y_box = Vector::Zero(n);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            y_box(rows[k].var) += res.y.size() > 0 ? res.y(static_cast<Index>(k)) : 0.0;
        }
        const Vector grad = program.H * out.x + program.f + y_box;
        Eigen::CompleteOrthogonalDecomposition<Matrix> codT(
            Matrix(program.A_eq.transpose()));
        const Vector mu = codT.solve(-grad);
        out.dual_residual = inf_norm(grad + program.A_eq.transpose() * mu);
        double box_viol = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (std::isfinite(program.lower(i)))
                box_viol = std::max(box_viol, program.lower(i) - out.x(i));
            if (std::isfinite(program.upper(i)))
                box_viol = std::max(box_viol, out.x(i) - program.upper(i));
        }
        out.primal_residual =
            std::max(inf_norm(program.A_eq * out.x - program.b_eq), box_viol);
        out.status = res.converged ? QpStatus::optimal : QpStatus::max_iter;
    }

    if (out.status == QpStatus::max_iter && program.A_eq.rows() > 0) {
        if (!equality_system_feasible(program, tol, std::min(max_iter, 20000))) {
            out.status = QpStatus::infeasible;
        }
    }
    out.objective = 0.5 * out.x.dot(program.H * out.x) + program.f.dot(out.x);
    return out;
}

} // namespace ddpc::qpcore
