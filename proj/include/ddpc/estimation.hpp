#pragma once

#include "ddpc/numkit.hpp"
#include "ddpc/sysdata.hpp"

namespace ddpc::estimation {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

// ============================================================================
// Multi-step predictor and residual covariances
// ============================================================================
// theta maps the regressor phi = [z; u] to the stacked horizon prediction.
// sigma_delta = (Y - theta*Phi)(Y - theta*Phi)^T / N is the training
// prediction-error covariance; sigma_phi = Phi Phi^T / N the regressor
// second moment. delta_range_basis/delta_weights hold the eigenpairs of
// sigma_delta on its numerical range, which is how the slack penalty
// ||d||^2_{sigma_delta^+} is evaluated downstream: in basis coordinates it
// is diagonal with weights 1/s.

struct PredictorModel {
    Matrix theta;              // n_y*T x n_phi
    Matrix sigma_delta;        // n_y*T x n_y*T
    Matrix sigma_phi;          // n_phi x n_phi
    Matrix delta_range_basis;  // orthonormal columns, n_y*T x r_delta
    Vector delta_weights;      // positive eigenvalues of sigma_delta on its range
    Matrix phi_range_basis;    // orthonormal columns spanning range(Phi)
    Index N = 0;
    bool causal = false;
    sysdata::Dimensions dims;

    Index rank_delta() const { return delta_range_basis.cols(); }
    Index rank_phi() const { return phi_range_basis.cols(); }

    // theta split into the z and u column blocks.
    Matrix theta_z() const { return theta.leftCols(dims.n_z()); }
    Matrix theta_u() const { return theta.rightCols(dims.horizon * dims.n_u); }

    Vector predict(const Vector& z, const Vector& u) const;
};

// Minimum-Frobenius-norm least-squares fit theta = Y Phi^+.
PredictorModel fit_least_squares(const sysdata::RegressorBundle& bundle);

// Structured fit: prediction step k is regressed on (z, u_{t..t+k}) only, so
// the u-block of theta is block lower-triangular and predictions are causal.
PredictorModel fit_causal(const sysdata::RegressorBundle& bundle);

struct Assumption1Result {
    bool holds = false;  // both covariances numerically positive definite
    Index rank_delta = 0;
    Index rank_phi = 0;
};

Assumption1Result check_assumption1(const PredictorModel& model);

// Row-major JSON dump of theta and the covariances, for inspection.
std::string export_model_json(const PredictorModel& model);

} // namespace ddpc::estimation
