#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddpc/numkit.hpp"
#include "ddpc/rng.hpp"

namespace ddpc::sysdata {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

// ============================================================================
// Plant and shape contracts
// ============================================================================

// ARX difference equation
//   y_t = sum_i a[i] y_{t-1-i} + sum_j b[j] u_{t-1-j},
// with a[i] of size n_y x n_y and b[j] of size n_y x n_u.
struct ArxPlant {
    std::vector<Matrix> output_coeffs;  // a, lag on y
    std::vector<Matrix> input_coeffs;   // b, lag on u

    Index n_u() const { return input_coeffs.empty() ? 0 : input_coeffs.front().cols(); }
    Index n_y() const { return output_coeffs.empty() ? 0 : output_coeffs.front().rows(); }
    Index lag() const {
        return static_cast<Index>(std::max(output_coeffs.size(), input_coeffs.size()));
    }

    static ArxPlant siso(const std::vector<double>& a, const std::vector<double>& b);
    void validate() const;
};

// Shape contract shared by every regressor-space object: rho past steps,
// horizon future steps, channel counts, and the column count of the data
// matrices. A record needs total_samples() = rho + horizon + n_cols - 1 steps.
struct Dimensions {
    Index rho = 0;      // past window length
    Index horizon = 0;  // prediction horizon T
    Index n_u = 1;
    Index n_y = 1;
    Index n_cols = 0;   // N, columns of the data matrices

    Index n_z() const { return rho * (n_u + n_y); }
    Index n_phi() const { return n_z() + horizon * n_u; }
    Index total_samples() const { return rho + horizon + n_cols - 1; }

    static Dimensions from_total_samples(Index rho, Index horizon, Index n_u, Index n_y,
                                         Index total);
    void validate() const;
};

struct TrainingRecord {
    Matrix inputs;            // n_u x total
    Matrix measured_outputs;  // n_y x total
    Matrix clean_outputs;     // n_y x total, retained for diagnostics
    std::uint64_t seed = 0;

    Index length() const { return inputs.cols(); }
};

// Hankel data matrices built from one record. Column t of Z stacks the rho
// inputs and outputs preceding step rho+t; columns of U and Y stack the
// horizon inputs/outputs from step rho+t on.
struct RegressorBundle {
    Matrix Z;    // n_z x N
    Matrix U;    // horizon*n_u x N
    Matrix Y;    // horizon*n_y x N (measured outputs)
    Matrix Phi;  // [Z; U]
    Dimensions dims;
};

// ============================================================================
// Simulation and data generation
// ============================================================================

struct SimulationResult {
    Matrix clean;     // n_y x L
    Matrix measured;  // clean + measurement noise
};

// Runs the difference equation for inputs (n_u x L), starting from past
// windows whose rightmost column is the most recent sample. Noise is
// measurement-only: the recursion is driven by the clean outputs.
SimulationResult simulate(const ArxPlant& plant, const Matrix& inputs,
                          const Matrix& past_inputs, const Matrix& past_outputs,
                          double noise_std, Rng& noise_rng);

SimulationResult simulate(const ArxPlant& plant, const Matrix& inputs,
                          const Matrix& past_inputs, const Matrix& past_outputs,
                          double noise_std, std::uint64_t seed);

struct Interval {
    double lo;
    double hi;
};

// Gaussian excitation with std input_std, clipped to input_bounds, applied
// from zero initial conditions; the first rho + plant.lag() samples are
// discarded as burn-in. Deterministic given the seed.
TrainingRecord generate_training(const ArxPlant& plant, const Dimensions& dims,
                                 double input_std, Interval input_bounds, double noise_std,
                                 std::uint64_t seed);

RegressorBundle build_bundle(const TrainingRecord& record, const Dimensions& dims);

// phi = [z; u].
Vector build_regressor(const Vector& z, const Vector& u);

// Exact multi-step predictor of an ARX plant over the regressor [z; u],
// valid when rho >= plant.lag(). Row-block k maps [z; u] to y_{t+k}.
Matrix multi_step_predictor(const ArxPlant& plant, Index rho, Index horizon);

// ============================================================================
// Dataset persistence (single-channel records)
// ============================================================================
// Format: one header line
//   # rho=<> T=<> N=<> seed=<> coeffs=a:<..>|b:<..>
// then one line per step: t,u,y_measured,y_clean with 17 significant digits.

void save_dataset(const std::string& path, const TrainingRecord& record,
                  const Dimensions& dims, const ArxPlant& plant);

struct LoadedDataset {
    TrainingRecord record;
    Dimensions dims;
    ArxPlant plant;
};

LoadedDataset load_dataset(const std::string& path);

} // namespace ddpc::sysdata
