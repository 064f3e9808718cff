#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddpc/controllers.hpp"

namespace ddpc::bench {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

// ============================================================================
// Experiment configuration
// ============================================================================

struct ExperimentConfig {
    std::vector<double> a_coeffs{1.2, -0.3, -0.1};
    std::vector<double> b_coeffs{0.5, -0.4, 0.1};
    Index rho = 20;
    Index horizon = 30;
    double q_weight = 1.0;
    double r_weight = 0.1;
    double setpoint = 0.75;
    double u_min = -1.0;
    double u_max = 1.0;
    double sigma_u = 0.6;
    double sigma_y = 0.1;
    std::vector<Index> nbar_grid{119, 300, 1000, 3000, 10000};
    std::vector<double> lambda2_grid{1.0, 10.0, 100.0, 1000.0};
    int train_realizations = 20;
    int noise_realizations = 10;
    std::uint64_t base_seed = 1;
    std::vector<std::string> controllers{"deepc", "spc", "cspc"};

    void validate() const;
    sysdata::ArxPlant plant() const;

    // Long-run grid: denser training lengths, 200 x 30 realizations.
    static ExperimentConfig paper_scale();
    static ExperimentConfig paper_scale(const ExperimentConfig& base);

    // Flat key = value text file; '#' starts a comment. Unknown keys are
    // rejected.
    static ExperimentConfig from_file(const std::string& path);
};

// ============================================================================
// Sweep results
// ============================================================================

struct RunResult {
    std::string controller;  // deepc | spc | cspc | oracle
    Index nbar = 0;
    bool has_lambda2 = false;
    double lambda2 = 0.0;
    std::uint64_t train_seed = 0;
    std::uint64_t noise_seed = 0;
    bool feasible = true;
    double j_star = 0.0;         // achieved tracking criterion
    double j_oracle_dist = 0.0;  // dissimilarity from the reference controller
    double slack_ms = 0.0;       // mean squared slack
    std::string qp_status = "optimal";
};

// One cell: train the given controller on the record generated from
// train_seed, form the past window from noise_seed, solve once, and roll the
// plant open loop under the optimal inputs.
RunResult run_single(const ExperimentConfig& config, const std::string& controller,
                     bool has_lambda2, double lambda2, Index nbar, std::uint64_t train_seed,
                     std::uint64_t noise_seed);

// Seed derivation used by the sweep, exposed so single cells can be
// regenerated in isolation.
std::uint64_t train_seed_for(const ExperimentConfig& config, std::size_t nbar_index,
                             int realization);
std::uint64_t noise_seed_for(const ExperimentConfig& config, std::size_t nbar_index,
                             int realization, int noise_index);

// Building blocks of a sweep cell, exposed for focused studies on top of the
// same construction: the tracking problem, the measured past window (true
// initial conditions are null, so past outputs are pure noise draws), the
// exact-model reference, and the noise-free plant response to an input
// sequence.
controllers::ControlProblem tracking_problem(const ExperimentConfig& config,
                                             const sysdata::Dimensions& dims);
Vector measured_past_window(const ExperimentConfig& config, const sysdata::Dimensions& dims,
                            std::uint64_t noise_seed);
Vector open_loop_response(const sysdata::ArxPlant& plant, const Vector& u, Index horizon);

struct OracleReference {
    Vector u;       // optimal inputs of the exact-model controller
    Vector y;       // noise-free plant response to them
    double j_star;  // its own tracking criterion
};

OracleReference oracle_reference(const ExperimentConfig& config,
                                 const sysdata::Dimensions& dims);

struct SweepOutput {
    std::vector<RunResult> results;
    int infeasible_cells = 0;
};

// Full factorial over (nbar x controllers x lambda2 x train x noise), run on
// `jobs` worker threads. Results are ordered deterministically regardless of
// scheduling; when `csv` is non-null rows are streamed to it in that order.
SweepOutput run_sweep(const ExperimentConfig& config, int jobs = 0, std::ostream* csv = nullptr,
                      std::ostream* progress = nullptr);

// ============================================================================
// Aggregation and output files
// ============================================================================

struct SummaryRow {
    std::string controller;
    Index nbar = 0;
    bool has_lambda2 = false;
    double lambda2 = 0.0;
    int cells = 0;
    int infeasible = 0;
    double j_star_q1 = 0, j_star_med = 0, j_star_q3 = 0;
    double j_oracle_q1 = 0, j_oracle_med = 0, j_oracle_q3 = 0;
    double slack_q1 = 0, slack_med = 0, slack_q3 = 0;
};

std::vector<SummaryRow> aggregate(const std::vector<RunResult>& results);

std::string results_csv_header();
std::string to_csv_row(const RunResult& r);
void write_results_csv(const std::vector<RunResult>& results, const std::string& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

// Self-contained SVG line plots (log-x over nbar, one curve per controller /
// lambda2, data table embedded as a comment): fig_slack.svg, fig_cost.svg,
// fig_oracle.svg.
void write_figures(const std::vector<SummaryRow>& rows, const std::string& outdir);

// Runs the sweep and writes results.csv, summary.csv, and the figures into
// outdir. Returns the number of infeasible cells.
int run_bench(const ExperimentConfig& config, const std::string& outdir, int jobs = 0,
              std::ostream* progress = nullptr);

// One benchmark instance, solved by every configured controller; prints a
// small J*/J° table.
void run_demo(const ExperimentConfig& config, std::ostream& out);

} // namespace ddpc::bench
