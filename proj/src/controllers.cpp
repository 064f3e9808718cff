#include "ddpc/controllers.hpp"

#include <cmath>

#include "ddpc/errors.hpp"

namespace ddpc::controllers {

namespace {

void require_pd(const Matrix& W, const char* name) {
    if (W.rows() != W.cols()) {
        throw InvalidInputError(std::string(name) + " must be square");
    }
    const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw InvalidInputError(std::string(name) + " must be symmetric");
    }
    Eigen::LLT<Matrix> llt(W);
    if (llt.info() != Eigen::Success) {
        throw InvalidInputError(std::string(name) + " must be positive definite");
    }
}

// Replicate per-channel bounds over the horizon.
void expand_box(const BoxBounds& box, Index horizon, Index channels, Vector& lower,
                Vector& upper) {
    if (box.lower.size() != channels || box.upper.size() != channels) {
        throw InvalidInputError("box bounds must have one entry per channel");
    }
    lower.resize(horizon * channels);
    upper.resize(horizon * channels);
    for (Index k = 0; k < horizon; ++k) {
        lower.segment(k * channels, channels) = box.lower;
        upper.segment(k * channels, channels) = box.upper;
    }
}

struct QpLayout {
    Index u_off = 0, u_len = 0;
    Index y_off = 0, y_len = 0;
};

// Tracking cost and boxes for the shared (u, y_hat) tail of each QP.
void apply_cost_and_boxes(const ControlProblem& problem, const sysdata::Dimensions& dims,
                          const QpLayout& lay, qpcore::QuadProgram& qp) {
    qp.H.block(lay.u_off, lay.u_off, lay.u_len, lay.u_len) += 2.0 * problem.R;
    qp.f.segment(lay.u_off, lay.u_len) -= 2.0 * problem.R * problem.u_ref;
    qp.H.block(lay.y_off, lay.y_off, lay.y_len, lay.y_len) += 2.0 * problem.Q;
    qp.f.segment(lay.y_off, lay.y_len) -= 2.0 * problem.Q * problem.y_ref;

    Vector lo, hi;
    expand_box(problem.input_box, dims.horizon, dims.n_u, lo, hi);
    qp.lower.segment(lay.u_off, lay.u_len) = lo;
    qp.upper.segment(lay.u_off, lay.u_len) = hi;
    if (problem.output_box) {
        expand_box(*problem.output_box, dims.horizon, dims.n_y, lo, hi);
        qp.lower.segment(lay.y_off, lay.y_len) = lo;
        qp.upper.segment(lay.y_off, lay.y_len) = hi;
    }
}

qpcore::QuadProgram blank_program(Index n) {
    qpcore::QuadProgram qp;
    qp.H = Matrix::Zero(n, n);
    qp.f = Vector::Zero(n);
    qp.lower = Vector::Constant(n, -qpcore::kInf);
    qp.upper = Vector::Constant(n, qpcore::kInf);
    return qp;
}

qpcore::QpSolution run_qp(const qpcore::QuadProgram& qp, const SolverSettings& settings,
                          const char* method) {
    qpcore::QpSolution sol = qpcore::solve_qp(qp, settings.tol, settings.max_iter);
    if (sol.status == qpcore::QpStatus::infeasible) {
        throw InfeasibleError(std::string(method) + ": problem is infeasible");
    }
    return sol;
}

// Predictor-based formulation shared by SPC and the oracle: decision
// variables (u, y_hat) with y_hat = theta_z z + theta_u u.
Solution solve_with_predictor(const ControlProblem& problem, const sysdata::Dimensions& dims,
                              const Matrix& theta_z, const Matrix& theta_u, const Vector& z,
                              const SolverSettings& settings, const char* method) {
    const Index n_u = dims.horizon * dims.n_u;
    const Index n_y = dims.horizon * dims.n_y;
    QpLayout lay{0, n_u, n_u, n_y};

    qpcore::QuadProgram qp = blank_program(n_u + n_y);
    apply_cost_and_boxes(problem, dims, lay, qp);

    qp.A_eq = Matrix::Zero(n_y, n_u + n_y);
    qp.A_eq.leftCols(n_u) = -theta_u;
    qp.A_eq.rightCols(n_y) = Matrix::Identity(n_y, n_y);
    qp.b_eq = theta_z * z;

    qpcore::QpSolution sol = run_qp(qp, settings, method);

    Solution out;
    out.u = sol.x.segment(lay.u_off, lay.u_len);
    out.y_hat = sol.x.segment(lay.y_off, lay.y_len);
    out.slack = Vector::Zero(n_y);
    out.objective = problem.cost(out.u, out.y_hat);
    out.qp = qpcore::summarize(sol, qp.num_vars());
    return out;
}

} // namespace

BoxBounds BoxBounds::unbounded(Index channels) {
    return {Vector::Constant(channels, -qpcore::kInf), Vector::Constant(channels, qpcore::kInf)};
}

BoxBounds BoxBounds::symmetric(Index channels, double limit) {
    return {Vector::Constant(channels, -limit), Vector::Constant(channels, limit)};
}

void ControlProblem::validate(const sysdata::Dimensions& dims) const {
    if (z.size() != dims.n_z()) {
        throw InvalidInputError("ControlProblem: past window length mismatch");
    }
    if (u_ref.size() != dims.horizon * dims.n_u || y_ref.size() != dims.horizon * dims.n_y) {
        throw InvalidInputError("ControlProblem: reference length mismatch");
    }
    if (Q.rows() != dims.horizon * dims.n_y || R.rows() != dims.horizon * dims.n_u) {
        throw InvalidInputError("ControlProblem: weight size mismatch");
    }
    require_pd(Q, "Q");
    require_pd(R, "R");
    if (!z.allFinite() || !u_ref.allFinite() || !y_ref.allFinite()) {
        throw InvalidInputError("ControlProblem: non-finite data");
    }
}

double ControlProblem::cost(const Vector& u, const Vector& y) const {
    const Vector du = u - u_ref;
    const Vector dy = y - y_ref;
    return dy.dot(Q * dy) + du.dot(R * du);
}

void ControllerSpec::validate() const {
    if (beta < 0 || beta2 < 0 || beta3 < 0 || lambda1 < 0 || lambda2 < 0) {
        throw InvalidInputError("ControllerSpec: hyper-parameters must be >= 0");
    }
}

Solution solve_spc(const ControlProblem& problem, const estimation::PredictorModel& model,
                   SolverSettings settings) {
    problem.validate(model.dims);
    return solve_with_predictor(problem, model.dims, model.theta_z(), model.theta_u(),
                                problem.z, settings, "solve_spc");
}

Solution solve_deepc(const ControlProblem& problem, const sysdata::RegressorBundle& bundle,
                     DeepcRegularizer regularizer, double beta, SolverSettings settings) {
    const sysdata::Dimensions& dims = bundle.dims;
    problem.validate(dims);
    if (beta < 0) {
        throw InvalidInputError("solve_deepc: beta must be >= 0");
    }

    // The past window must be reachable by the recorded data, otherwise the
    // equality system over g has no solution.
    {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(bundle.Z);
        const Vector g0 = cod.solve(problem.z);
        if ((bundle.Z * g0 - problem.z).cwiseAbs().maxCoeff() >
            1e-8 * (1.0 + problem.z.cwiseAbs().maxCoeff())) {
            throw InfeasibleError(
                "solve_deepc: past window is outside the span of the recorded data "
                "(rank-deficient past-data rows)");
        }
    }

    const Index N = dims.n_cols;
    const Index n_u = dims.horizon * dims.n_u;
    const Index n_y = dims.horizon * dims.n_y;
    const Index n_z = dims.n_z();
    QpLayout lay{N, n_u, N + n_u, n_y};

    qpcore::QuadProgram qp = blank_program(N + n_u + n_y);
    apply_cost_and_boxes(problem, dims, lay, qp);

    const numkit::SvdFactors phi_svd = numkit::svd(bundle.Phi);
    const Index r = phi_svd.numerical_rank;
    if (regularizer == DeepcRegularizer::l2) {
        qp.H.topLeftCorner(N, N) += 2.0 * beta * Matrix::Identity(N, N);
    } else {
        // I - Pi_Phi, the projector onto null(Phi).
        Matrix proj = Matrix::Identity(N, N) -
                      phi_svd.right_vectors.leftCols(r) *
                          phi_svd.right_vectors.leftCols(r).transpose();
        qp.H.topLeftCorner(N, N) += 2.0 * beta * proj;
    }

    qp.A_eq = Matrix::Zero(n_z + n_u + n_y, qp.num_vars());
    qp.b_eq = Vector::Zero(n_z + n_u + n_y);
    qp.A_eq.topLeftCorner(n_z, N) = bundle.Z;
    qp.b_eq.head(n_z) = problem.z;
    qp.A_eq.block(n_z, 0, n_u, N) = bundle.U;
    qp.A_eq.block(n_z, lay.u_off, n_u, n_u) = -Matrix::Identity(n_u, n_u);
    qp.A_eq.block(n_z + n_u, 0, n_y, N) = bundle.Y;
    qp.A_eq.block(n_z + n_u, lay.y_off, n_y, n_y) = -Matrix::Identity(n_y, n_y);

    qpcore::QpSolution sol = run_qp(qp, settings, "solve_deepc");

    Solution out;
    out.g = sol.x.head(N);
    out.u = sol.x.segment(lay.u_off, lay.u_len);
    out.y_hat = sol.x.segment(lay.y_off, lay.y_len);

    // Slack relative to the least-squares predictor theta = Y Phi^+.
    const Matrix pinv_phi = phi_svd.right_vectors.leftCols(r) *
                            phi_svd.singular_values.head(r).cwiseInverse().asDiagonal() *
                            phi_svd.left_vectors.leftCols(r).transpose();
    const Vector phi = sysdata::build_regressor(problem.z, out.u);
    out.slack = out.y_hat - bundle.Y * (pinv_phi * phi);

    double reg = 0.0;
    if (regularizer == DeepcRegularizer::l2) {
        reg = out.g.squaredNorm();
    } else {
        const Vector tail = out.g - phi_svd.right_vectors.leftCols(r) *
                                        (phi_svd.right_vectors.leftCols(r).transpose() * out.g);
        reg = tail.squaredNorm();
    }
    out.objective = problem.cost(out.u, out.y_hat) + beta * reg;
    out.qp = qpcore::summarize(sol, qp.num_vars());
    return out;
}

Solution solve_gddpc(const ControlProblem& problem, const numkit::LqBlocks& lq, double beta2,
                     double beta3, SolverSettings settings) {
    if (beta2 < 0 || beta3 < 0) {
        throw InvalidInputError("solve_gddpc: weights must be >= 0");
    }
    if (lq.degenerate) {
        throw PreconditionError(
            "solve_gddpc: LQ diagonal blocks are singular (data covariances are "
            "rank-deficient), the LQ-coordinate formulation is not defined");
    }
    const Index n_z = lq.L11.rows();
    const Index n_u = lq.L22.rows();
    const Index n_y = lq.L33.rows();
    if (problem.z.size() != n_z) {
        throw InvalidInputError("solve_gddpc: past window length mismatch");
    }

    // Recover the shape contract from the problem and the block sizes.
    sysdata::Dimensions dims;
    dims.n_u = problem.input_box.lower.size();
    if (dims.n_u < 1 || problem.u_ref.size() % dims.n_u != 0) {
        throw InvalidInputError("solve_gddpc: inconsistent input channel count");
    }
    dims.horizon = problem.u_ref.size() / dims.n_u;
    if (problem.y_ref.size() % dims.horizon != 0 || n_z % (dims.n_u + problem.y_ref.size() / dims.horizon) != 0) {
        throw InvalidInputError("solve_gddpc: inconsistent block sizes");
    }
    dims.n_y = problem.y_ref.size() / dims.horizon;
    dims.rho = n_z / (dims.n_u + dims.n_y);
    dims.n_cols = lq.Q1.cols();
    problem.validate(dims);

    const Vector gamma1 = lq.L11.triangularView<Eigen::Lower>().solve(problem.z);

    // Decision vector: (gamma2, gamma3, u, y_hat). The auxiliary (u, y_hat)
    // block keeps the actuator/output boxes literal; the equality
    // elimination in the QP solver reduces the iteration space back to the
    // (gamma2, gamma3) coordinates.
    QpLayout lay{n_u + n_y, n_u, n_u + n_y + n_u, n_y};
    qpcore::QuadProgram qp = blank_program(2 * (n_u + n_y));
    apply_cost_and_boxes(problem, dims, lay, qp);
    qp.H.topLeftCorner(n_u, n_u) += 2.0 * beta2 * Matrix::Identity(n_u, n_u);
    qp.H.block(n_u, n_u, n_y, n_y) += 2.0 * beta3 * Matrix::Identity(n_y, n_y);

    qp.A_eq = Matrix::Zero(n_u + n_y, qp.num_vars());
    qp.b_eq = Vector::Zero(n_u + n_y);
    qp.A_eq.block(0, 0, n_u, n_u) = lq.L22;
    qp.A_eq.block(0, lay.u_off, n_u, n_u) = -Matrix::Identity(n_u, n_u);
    qp.b_eq.head(n_u) = -lq.L21 * gamma1;
    qp.A_eq.block(n_u, 0, n_y, n_u) = lq.L32;
    qp.A_eq.block(n_u, n_u, n_y, n_y) = lq.L33;
    qp.A_eq.block(n_u, lay.y_off, n_y, n_y) = -Matrix::Identity(n_y, n_y);
    qp.b_eq.tail(n_y) = -lq.L31 * gamma1;

    qpcore::QpSolution sol = run_qp(qp, settings, "solve_gddpc");

    Solution out;
    out.gamma1 = gamma1;
    out.gamma2 = sol.x.head(n_u);
    out.gamma3 = sol.x.segment(n_u, n_y);
    out.u = sol.x.segment(lay.u_off, lay.u_len);
    out.y_hat = sol.x.segment(lay.y_off, lay.y_len);
    // y_hat - theta*phi collapses to L33 gamma3 in LQ coordinates.
    out.slack = lq.L33 * out.gamma3;
    out.objective = problem.cost(out.u, out.y_hat) + beta2 * out.gamma2.squaredNorm() +
                    beta3 * out.gamma3.squaredNorm();
    out.qp = qpcore::summarize(sol, qp.num_vars());
    return out;
}

Solution solve_indirect(const ControlProblem& problem, const estimation::PredictorModel& model,
                        double lambda1, double lambda2, IndirectOptions options,
                        SolverSettings settings) {
    const sysdata::Dimensions& dims = model.dims;
    problem.validate(dims);
    if (lambda1 < 0 || lambda2 < 0) {
        throw InvalidInputError("solve_indirect: lambda weights must be >= 0");
    }

    const Index n_u = dims.horizon * dims.n_u;
    const Index n_y = dims.horizon * dims.n_y;
    const Index n_z = dims.n_z();
    const Index n_phi = dims.n_phi();
    const Index r_delta = model.rank_delta();
    const double N = static_cast<double>(model.N);

    QpLayout lay{0, n_u, n_u + r_delta, n_y};
    qpcore::QuadProgram qp = blank_program(n_u + r_delta + n_y);
    apply_cost_and_boxes(problem, dims, lay, qp);

    // Slack penalty in range-basis coordinates: diagonal with weights 1/s.
    if (lambda2 > 0 && r_delta > 0) {
        qp.H.block(n_u, n_u, r_delta, r_delta) +=
            (2.0 * lambda2 / N) * model.delta_weights.cwiseInverse().asDiagonal().toDenseMatrix();
    }

    // Regressor penalty (lambda1/N)||phi||^2 weighted by sigma_phi^+,
    // expanded over phi = [z; u].
    Matrix phi_weight;  // pseudo-inverse of sigma_phi, reused for the objective
    if (lambda1 > 0) {
        phi_weight = numkit::symmetrized(numkit::pinv(model.sigma_phi));
        const Matrix M_uu = phi_weight.bottomRightCorner(n_u, n_u);
        const Matrix M_uz = phi_weight.bottomLeftCorner(n_u, n_z);
        qp.H.topLeftCorner(n_u, n_u) += (2.0 * lambda1 / N) * M_uu;
        qp.f.head(n_u) += (2.0 * lambda1 / N) * (M_uz * problem.z);
    }

    // Prediction consistency: y_hat = theta_z z + theta_u u + B_delta alpha.
    Matrix rows = Matrix::Zero(n_y, qp.num_vars());
    rows.leftCols(n_u) = -model.theta_u();
    rows.block(0, n_u, n_y, r_delta) = -model.delta_range_basis;
    rows.rightCols(n_y) = Matrix::Identity(n_y, n_y);
    Vector rhs = model.theta_z() * problem.z;

    // Range constraint on phi when the regressor covariance is rank
    // deficient: the component of [z; u] orthogonal to range(Phi) must
    // vanish. Relaxation drops the constraint; the predictor and the
    // weighted penalty both annihilate the out-of-range component anyway.
    Index n_range_rows = 0;
    Matrix range_rows;
    Vector range_rhs;
    if (model.rank_phi() < n_phi && !options.relax_phi_range) {
        Eigen::HouseholderQR<Matrix> qr(model.phi_range_basis);
        const Matrix full =
            qr.householderQ() * Matrix::Identity(n_phi, n_phi);
        const Matrix complement = full.rightCols(n_phi - model.rank_phi());
        const Matrix cz = complement.transpose().leftCols(n_z);
        const Matrix cu = complement.transpose().rightCols(n_u);
        const Vector target = -cz * problem.z;

        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cu);
        const Vector u_ls = cod.solve(target);
        const double gap = (cu * u_ls - target).cwiseAbs().maxCoeff();
        if (gap > 1e-8 * (1.0 + problem.z.cwiseAbs().maxCoeff())) {
            throw InfeasibleError(
                "solve_indirect: no input keeps the regressor inside the range of "
                "the data covariance for this past window; set relax_phi_range to "
                "project instead");
        }
        n_range_rows = cu.rows();
        range_rows = Matrix::Zero(n_range_rows, qp.num_vars());
        range_rows.leftCols(n_u) = cu;
        range_rhs = target;
    }

    qp.A_eq = Matrix::Zero(n_y + n_range_rows, qp.num_vars());
    qp.b_eq = Vector::Zero(n_y + n_range_rows);
    qp.A_eq.topRows(n_y) = rows;
    qp.b_eq.head(n_y) = rhs;
    if (n_range_rows > 0) {
        qp.A_eq.bottomRows(n_range_rows) = range_rows;
        qp.b_eq.tail(n_range_rows) = range_rhs;
    }

    qpcore::QpSolution sol = run_qp(qp, settings, "solve_indirect");

    Solution out;
    out.u = sol.x.segment(lay.u_off, lay.u_len);
    const Vector alpha = sol.x.segment(n_u, r_delta);
    out.y_hat = sol.x.segment(lay.y_off, lay.y_len);
    out.slack = model.delta_range_basis * alpha;

    double phi_penalty = 0.0;
    if (lambda1 > 0) {
        const Vector phi = sysdata::build_regressor(problem.z, out.u);
        phi_penalty = (lambda1 / N) * phi.dot(phi_weight * phi);
    }
    double slack_penalty = 0.0;
    if (lambda2 > 0 && r_delta > 0) {
        slack_penalty = (lambda2 / N) * alpha.cwiseQuotient(model.delta_weights).dot(alpha);
    }
    out.objective = problem.cost(out.u, out.y_hat) + phi_penalty + slack_penalty;
    out.qp = qpcore::summarize(sol, qp.num_vars());
    return out;
}

Matrix effective_tracking_weight(const Matrix& Q, const Matrix& sigma_delta, double lambda2,
                                 Index N) {
    require_pd(Q, "Q");
    if (lambda2 < 0 || N < 1) {
        throw InvalidInputError("effective_tracking_weight: bad lambda2 or N");
    }
    Matrix W = Q;
    if (lambda2 > 0) {
        Eigen::LLT<Matrix> llt(sigma_delta);
        if (llt.info() != Eigen::Success) {
            throw PreconditionError("effective_tracking_weight: sigma_delta must be PD");
        }
        W += (lambda2 / static_cast<double>(N)) *
             llt.solve(Matrix::Identity(Q.rows(), Q.cols()));
    }
    Eigen::LLT<Matrix> llt_w(numkit::symmetrized(W));
    Matrix Qt = Q - Q * llt_w.solve(Q);
    return numkit::symmetrized(Qt);
}

Solution solve_unconstrained_closed_form(const ControlProblem& problem,
                                         const estimation::PredictorModel& model,
                                         double lambda1, double lambda2) {
    const sysdata::Dimensions& dims = model.dims;
    problem.validate(dims);
    if (lambda1 < 0 || lambda2 < 0) {
        throw InvalidInputError("closed form: lambda weights must be >= 0");
    }
    if (model.rank_delta() < model.sigma_delta.rows()) {
        throw PreconditionError("closed form: sigma_delta must be positive definite");
    }
    if (lambda1 > 0 && model.rank_phi() < model.sigma_phi.rows()) {
        throw PreconditionError("closed form: sigma_phi must be positive definite");
    }

    const Index n_u = dims.horizon * dims.n_u;
    const Index n_z = dims.n_z();
    const double N = static_cast<double>(model.N);
    const Matrix theta_z = model.theta_z();
    const Matrix theta_u = model.theta_u();

    const Matrix Qt = effective_tracking_weight(problem.Q, model.sigma_delta, lambda2, model.N);

    Matrix A = theta_u.transpose() * Qt * theta_u + problem.R;
    Vector b = theta_u.transpose() * (Qt * (problem.y_ref - theta_z * problem.z)) +
               problem.R * problem.u_ref;
    Matrix phi_weight;
    if (lambda1 > 0) {
        Eigen::LLT<Matrix> llt(model.sigma_phi);
        phi_weight = numkit::symmetrized(
            llt.solve(Matrix::Identity(model.sigma_phi.rows(), model.sigma_phi.cols())));
        A += (lambda1 / N) * phi_weight.bottomRightCorner(n_u, n_u);
        b -= (lambda1 / N) * (phi_weight.bottomLeftCorner(n_u, n_z) * problem.z);
    }
    A = numkit::symmetrized(A);
    Eigen::LLT<Matrix> llt_a(A);
    if (llt_a.info() != Eigen::Success) {
        throw PreconditionError("closed form: reduced system is not positive definite");
    }

    Solution out;
    out.u = llt_a.solve(b);

    // Slack recovered from the elimination step.
    const Vector pred = theta_z * problem.z + theta_u * out.u;
    Matrix W = problem.Q;
    if (lambda2 > 0) {
        Eigen::LLT<Matrix> llt_d(model.sigma_delta);
        W += (lambda2 / N) *
             llt_d.solve(Matrix::Identity(problem.Q.rows(), problem.Q.cols()));
    }
    Eigen::LLT<Matrix> llt_w(numkit::symmetrized(W));
    out.slack = llt_w.solve(problem.Q * (problem.y_ref - pred));
    out.y_hat = pred + out.slack;

    double phi_penalty = 0.0;
    if (lambda1 > 0) {
        const Vector phi = sysdata::build_regressor(problem.z, out.u);
        phi_penalty = (lambda1 / N) * phi.dot(phi_weight * phi);
    }
    double slack_penalty = 0.0;
    if (lambda2 > 0) {
        Eigen::LLT<Matrix> llt_d(model.sigma_delta);
        slack_penalty = (lambda2 / N) * out.slack.dot(llt_d.solve(out.slack));
    }
    out.objective = problem.cost(out.u, out.y_hat) + phi_penalty + slack_penalty;
    out.qp.status = qpcore::QpStatus::optimal;
    out.qp.num_vars = n_u;
    return out;
}

Solution solve_oracle(const ControlProblem& problem, const sysdata::ArxPlant& plant,
                      const Matrix& true_past_inputs, const Matrix& true_past_outputs,
                      SolverSettings settings) {
    plant.validate();
    const Index window = true_past_inputs.cols();
    if (window < plant.lag() || true_past_outputs.cols() != window) {
        throw InvalidInputError("solve_oracle: past windows must cover the plant lag");
    }
    if (true_past_inputs.rows() != plant.n_u() || true_past_outputs.rows() != plant.n_y()) {
        throw InvalidInputError("solve_oracle: channel mismatch");
    }

    const Index horizon = problem.u_ref.size() / plant.n_u();
    sysdata::Dimensions dims{window, horizon, plant.n_u(), plant.n_y(), 1};

    // Exact recursion of the plant difference equation over [z; u].
    const Matrix theta = sysdata::multi_step_predictor(plant, window, horizon);

    Vector z_true(dims.n_z());
    for (Index k = 0; k < window; ++k) {
        z_true.segment(k * plant.n_u(), plant.n_u()) = true_past_inputs.col(k);
        z_true.segment(window * plant.n_u() + k * plant.n_y(), plant.n_y()) =
            true_past_outputs.col(k);
    }

    ControlProblem oracle_problem = problem;
    oracle_problem.z = z_true;
    oracle_problem.validate(dims);
    return solve_with_predictor(oracle_problem, dims, theta.leftCols(dims.n_z()),
                                theta.rightCols(horizon * plant.n_u()), z_true, settings,
                                "solve_oracle");
}

} // namespace ddpc::controllers
