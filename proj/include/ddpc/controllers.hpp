#pragma once

#include <optional>

#include "ddpc/estimation.hpp"
#include "ddpc/numkit.hpp"
#include "ddpc/qpcore.hpp"
#include "ddpc/sysdata.hpp"

namespace ddpc::controllers {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

// ============================================================================
// Problem data
// ============================================================================

// Per-channel interval bounds, replicated over the horizon.
struct BoxBounds {
    Vector lower;
    Vector upper;

    static BoxBounds unbounded(Index channels);
    static BoxBounds symmetric(Index channels, double limit);
};

struct ControlProblem {
    Vector z;      // measured past window [u_past; y_past]
    Vector u_ref;  // horizon*n_u
    Vector y_ref;  // horizon*n_y
    Matrix Q;      // horizon*n_y square, symmetric positive definite
    Matrix R;      // horizon*n_u square, symmetric positive definite
    BoxBounds input_box;                    // per input channel
    std::optional<BoxBounds> output_box;    // per output channel, on predictions

    void validate(const sysdata::Dimensions& dims) const;

    // Tracking cost ||y - y_ref||_Q^2 + ||u - u_ref||_R^2.
    double cost(const Vector& u, const Vector& y) const;
};

enum class Variant { spc, cspc, deepc_l2, deepc_proj, gamma_ddpc, indirect, oracle };

struct ControllerSpec {
    Variant variant = Variant::spc;
    double beta = 0.0;             // deepc variants
    double beta2 = 0.0, beta3 = 0.0;  // gamma_ddpc
    double lambda1 = 0.0, lambda2 = 0.0;  // indirect
    bool causal_predictor = false;        // indirect predictor choice

    void validate() const;
};

struct Solution {
    Vector u;      // horizon*n_u
    Vector y_hat;  // horizon*n_y
    Vector slack;  // y_hat - theta*phi(z, u)
    // Internal variables, populated per formulation.
    Vector g;                         // data combination vector
    Vector gamma1, gamma2, gamma3;    // LQ coordinates
    double objective = 0.0;           // formulation objective incl. penalties
    qpcore::QpDiagnostics qp;
};

enum class DeepcRegularizer { l2, projection };

struct IndirectOptions {
    // When the regressor range constraint cannot be met for the given z,
    // drop it instead of failing; predictions and the penalty only depend on
    // the projection of phi onto the regressor range, so this is lossless.
    bool relax_phi_range = false;
};

struct SolverSettings {
    double tol = 1e-9;
    int max_iter = 50000;
};

// ============================================================================
// Formulations
// ============================================================================

// Indirect predictive control with the fitted multi-step predictor and zero
// slack. A causal model yields the causality-structured variant.
Solution solve_spc(const ControlProblem& problem, const estimation::PredictorModel& model,
                   SolverSettings settings = {});

// Direct method over the data combination vector g with Hankel equality
// constraints and a quadratic regularizer on g.
Solution solve_deepc(const ControlProblem& problem, const sysdata::RegressorBundle& bundle,
                     DeepcRegularizer regularizer, double beta, SolverSettings settings = {});

// Direct method in LQ coordinates; gamma1 is pinned by the past window and
// (gamma2, gamma3) are the decision variables.
Solution solve_gddpc(const ControlProblem& problem, const numkit::LqBlocks& lq,
                     double beta2, double beta3, SolverSettings settings = {});

// Unified indirect formulation: predictor plus a slack constrained to the
// range of the residual covariance, with weighted penalties on the regressor
// and the slack.
Solution solve_indirect(const ControlProblem& problem, const estimation::PredictorModel& model,
                        double lambda1, double lambda2, IndirectOptions options = {},
                        SolverSettings settings = {});

// Closed form for the unconstrained case with positive definite covariances:
// the slack is eliminated, leaving a reduced tracking weight.
Solution solve_unconstrained_closed_form(const ControlProblem& problem,
                                         const estimation::PredictorModel& model,
                                         double lambda1, double lambda2);

// Q_tilde = Q - Q (Q + (lambda2/N) sigma_delta^{-1})^{-1} Q.
Matrix effective_tracking_weight(const Matrix& Q, const Matrix& sigma_delta, double lambda2,
                                 Index N);

// Reference controller with the exact plant model and the true (noise-free)
// past windows; rightmost column of each window is the most recent sample.
Solution solve_oracle(const ControlProblem& problem, const sysdata::ArxPlant& plant,
                      const Matrix& true_past_inputs, const Matrix& true_past_outputs,
                      SolverSettings settings = {});

} // namespace ddpc::controllers
