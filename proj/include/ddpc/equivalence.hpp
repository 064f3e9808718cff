#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddpc/controllers.hpp"

namespace ddpc::equivalence {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

// ============================================================================
// Reports
// ============================================================================

// Default gap tolerances: absolute-plus-relative, 1e-5 for decision
// variables and 1e-7 for objectives. Two high-accuracy solves each carry
// ~1e-9 KKT residual, amplified by problem conditioning.
inline constexpr double kVarTol = 1e-5;
inline constexpr double kObjTol = 1e-7;

struct EquivalenceReport {
    std::string check;
    std::uint64_t seed = 0;
    sysdata::Dimensions dims;
    int regime = 0;
    std::string regularizer;  // direct/indirect checks only
    double beta = 0.0;
    double beta2 = 0.0, beta3 = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;

    double max_u_gap = 0.0;
    double max_yhat_gap = 0.0;
    double objective_gap = 0.0;
    double psd_margin = 0.0;  // closed-form check: min eigenvalue of Q - Q_tilde
    bool assumption1 = false;
    double tolerance = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string note;

    std::string to_json_line() const;
};

struct IdentityReport {
    std::uint64_t seed = 0;
    sysdata::Dimensions dims;
    double sigma_delta_identity_err = 0.0;  // L33 L33' vs N*sigma_delta
    double sigma_phi_identity_err = 0.0;    // M1 M1' vs N*sigma_phi
    double pinv_norm_identity_err = 0.0;    // ||M+ x||^2 vs ||x||^2_{(MM')+}
    bool pass = false;

    std::string to_json_line() const;
};

// ============================================================================
// Randomized instances
// ============================================================================
// Data-length regimes: interpolation (N <= n_phi, zero residual covariance),
// partial rank (n_phi < N < n_phi + n_y*T), full rank (N beyond that, both
// covariances positive definite almost surely).

enum class DataRegime { interpolation = 0, partial_rank = 1, full_rank = 2 };

struct RandomInstance {
    sysdata::Dimensions dims;
    sysdata::ArxPlant plant;
    sysdata::RegressorBundle bundle;
    controllers::ControlProblem problem;
    std::uint64_t seed = 0;
    DataRegime regime = DataRegime::full_rank;
};

RandomInstance make_random_instance(std::uint64_t seed, DataRegime regime,
                                    bool unconstrained = false, bool with_output_box = false);

// ============================================================================
// Checks
// ============================================================================

// Direct formulation over g vs the unified indirect formulation, with the
// weight mapping (lambda1, lambda2) = (beta, beta) for the l2 regularizer
// and (0, beta) for the projection regularizer.
EquivalenceReport check_direct_indirect(const sysdata::RegressorBundle& bundle,
                                        const controllers::ControlProblem& problem,
                                        double beta, controllers::DeepcRegularizer regularizer);

// LQ-coordinate formulation vs the indirect one with lambda1 = beta2,
// lambda2 = beta3. Also verifies that the objectives differ by exactly
// beta2*||gamma1||^2, the constant tied to the pinned past coordinates.
EquivalenceReport check_gamma_indirect(const sysdata::RegressorBundle& bundle,
                                       const controllers::ControlProblem& problem, double beta2,
                                       double beta3);

// Unconstrained closed form vs the indirect QP; checks the reduced tracking
// weight stays dominated by Q.
EquivalenceReport check_closed_form(const estimation::PredictorModel& model,
                                    const controllers::ControlProblem& problem, double lambda1,
                                    double lambda2);

// LQ/covariance identities on a bundle plus randomized pseudo-inverse
// weighted-norm identities on (M, x in range(M)) pairs.
IdentityReport check_factorization_identities(const sysdata::RegressorBundle& bundle,
                                              std::uint64_t pair_seed, int n_pairs = 20);

// ============================================================================
// Suite driver (used by the CLI and the acceptance tests)
// ============================================================================

struct SuiteConfig {
    int instances_per_branch = 50;
    int identity_bundles = 20;
    std::uint64_t base_seed = 1234;
};

struct SuiteSummary {
    int total = 0;
    int passed = 0;
    int failed = 0;
    int skipped = 0;
    std::vector<EquivalenceReport> reports;
    std::vector<IdentityReport> identity_reports;

    bool all_passed() const { return failed == 0 && passed > 0; }
};

// Runs every certification branch; when json_lines is non-null, one JSON
// object per instance is streamed to it in deterministic order.
SuiteSummary run_certification(const SuiteConfig& config, std::ostream* json_lines = nullptr);

} // namespace ddpc::equivalence
