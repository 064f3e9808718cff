#include "ddpc/sysdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddpc/errors.hpp"

namespace ddpc::sysdata {

namespace {

constexpr double kDivergenceGuard = 1e12;

// Stream ids for seed derivation.
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ArxPlant ArxPlant::siso(const std::vector<double>& a, const std::vector<double>& b) {
    ArxPlant plant;
    plant.output_coeffs.reserve(a.size());
    for (double c : a) plant.output_coeffs.push_back(Matrix::Constant(1, 1, c));
    plant.input_coeffs.reserve(b.size());
    for (double c : b) plant.input_coeffs.push_back(Matrix::Constant(1, 1, c));
    plant.validate();
    return plant;
}

void ArxPlant::validate() const {
    if (output_coeffs.empty() && input_coeffs.empty()) {
        throw InvalidInputError("ArxPlant: no coefficients");
    }
    if (lag() < 1) {
        throw InvalidInputError("ArxPlant: lag order must be >= 1");
    }
    const Index ny = n_y();
    const Index nu = n_u();
    for (const Matrix& a : output_coeffs) {
        if (a.rows() != ny || a.cols() != ny || !numkit::is_finite(a)) {
            throw InvalidInputError("ArxPlant: bad output coefficient block");
        }
    }
    for (const Matrix& b : input_coeffs) {
        if (b.rows() != ny || b.cols() != nu || !numkit::is_finite(b)) {
            throw InvalidInputError("ArxPlant: bad input coefficient block");
        }
    }
}

Dimensions Dimensions::from_total_samples(Index rho, Index horizon, Index n_u, Index n_y,
                                          Index total) {
    Dimensions dims{rho, horizon, n_u, n_y, total - rho - horizon + 1};
    dims.validate();
    return dims;
}

void Dimensions::validate() const {
    if (rho < 1 || horizon < 1 || n_u < 1 || n_y < 1 || n_cols < 1) {
        throw InvalidInputError("Dimensions: all fields must be positive");
    }
}

SimulationResult simulate(const ArxPlant& plant, const Matrix& inputs,
                          const Matrix& past_inputs, const Matrix& past_outputs,
                          double noise_std, Rng& noise_rng) {
    plant.validate();
    const Index lag = plant.lag();
    const Index L = inputs.cols();
    if (inputs.rows() != plant.n_u()) {
        throw InvalidInputError("simulate: input channel mismatch");
    }
    if (past_inputs.cols() < lag || past_outputs.cols() < lag) {
        throw InvalidInputError("simulate: initial window shorter than the plant lag");
    }
    if (!numkit::is_finite(inputs) || !numkit::is_finite(past_inputs) ||
        !numkit::is_finite(past_outputs)) {
        throw InvalidInputError("simulate: non-finite inputs");
    }

    SimulationResult out;
    out.clean = Matrix::Zero(plant.n_y(), L);
    out.measured = Matrix::Zero(plant.n_y(), L);

    auto input_at = [&](Index t) -> Vector {
        // t < 0 indexes the initial window from its right edge.
        if (t >= 0) return inputs.col(t);
        return past_inputs.col(past_inputs.cols() + t);
    };
    auto clean_output_at = [&](Index t) -> Vector {
        if (t >= 0) return out.clean.col(t);
        return past_outputs.col(past_outputs.cols() + t);
    };

    for (Index t = 0; t < L; ++t) {
        Vector y = Vector::Zero(plant.n_y());
        for (std::size_t i = 0; i < plant.output_coeffs.size(); ++i) {
            y += plant.output_coeffs[i] * clean_output_at(t - 1 - static_cast<Index>(i));
        }
        for (std::size_t j = 0; j < plant.input_coeffs.size(); ++j) {
            y += plant.input_coeffs[j] * input_at(t - 1 - static_cast<Index>(j));
        }
        if (!y.allFinite() || y.cwiseAbs().maxCoeff() > kDivergenceGuard) {
            throw DivergenceError("simulate: output diverged at step " + std::to_string(t));
        }
        out.clean.col(t) = y;
        for (Index c = 0; c < y.size(); ++c) {
            out.measured(c, t) = y(c) + noise_rng.gaussian(noise_std);
        }
    }
    return out;
}

SimulationResult simulate(const ArxPlant& plant, const Matrix& inputs,
                          const Matrix& past_inputs, const Matrix& past_outputs,
                          double noise_std, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {kNoiseStream}));
    return simulate(plant, inputs, past_inputs, past_outputs, noise_std, rng);
}

TrainingRecord generate_training(const ArxPlant& plant, const Dimensions& dims,
                                 double input_std, Interval input_bounds, double noise_std,
                                 std::uint64_t seed) {
    plant.validate();
    dims.validate();
    if (input_std <= 0.0) {
        throw InvalidInputError("generate_training: input_std must be positive");
    }
    if (!(input_bounds.lo <= input_bounds.hi)) {
        throw InvalidInputError("generate_training: empty input interval");
    }

    const Index total = dims.total_samples();
    const Index burn_in = dims.rho + plant.lag();
    const Index L = burn_in + total;

    Rng input_rng(derive_seed(seed, {kInputStream}));
    Matrix inputs(plant.n_u(), L);
    for (Index t = 0; t < L; ++t) {
        for (Index c = 0; c < plant.n_u(); ++c) {
            inputs(c, t) = std::clamp(input_rng.gaussian(input_std), input_bounds.lo,
                                      input_bounds.hi);
        }
    }

    const Index lag = plant.lag();
    Matrix zero_u = Matrix::Zero(plant.n_u(), lag);
    Matrix zero_y = Matrix::Zero(plant.n_y(), lag);
    Rng noise_rng(derive_seed(seed, {kNoiseStream}));
    SimulationResult sim = simulate(plant, inputs, zero_u, zero_y, noise_std, noise_rng);

    TrainingRecord record;
    record.inputs = inputs.rightCols(total);
    record.measured_outputs = sim.measured.rightCols(total);
    record.clean_outputs = sim.clean.rightCols(total);
    record.seed = seed;
    return record;
}

RegressorBundle build_bundle(const TrainingRecord& record, const Dimensions& dims) {
    dims.validate();
    if (record.length() != dims.total_samples()) {
        throw InvalidInputError("build_bundle: record length " +
                                std::to_string(record.length()) + " != required " +
                                std::to_string(dims.total_samples()));
    }
    if (record.inputs.rows() != dims.n_u || record.measured_outputs.rows() != dims.n_y) {
        throw InvalidInputError("build_bundle: channel mismatch");
    }

    const Index N = dims.n_cols;
    RegressorBundle bundle;
    bundle.dims = dims;
    bundle.Z = Matrix(dims.n_z(), N);
    bundle.U = Matrix(dims.horizon * dims.n_u, N);
    bundle.Y = Matrix(dims.horizon * dims.n_y, N);

    for (Index t = 0; t < N; ++t) {
        const Index now = t + dims.rho;  // first future step of column t
        for (Index k = 0; k < dims.rho; ++k) {
            bundle.Z.col(t).segment(k * dims.n_u, dims.n_u) =
                record.inputs.col(now - dims.rho + k);
            bundle.Z.col(t).segment(dims.rho * dims.n_u + k * dims.n_y, dims.n_y) =
                record.measured_outputs.col(now - dims.rho + k);
        }
        for (Index k = 0; k < dims.horizon; ++k) {
            bundle.U.col(t).segment(k * dims.n_u, dims.n_u) = record.inputs.col(now + k);
            bundle.Y.col(t).segment(k * dims.n_y, dims.n_y) =
                record.measured_outputs.col(now + k);
        }
    }

    bundle.Phi = Matrix(dims.n_phi(), N);
    bundle.Phi << bundle.Z, bundle.U;
    return bundle;
}

Vector build_regressor(const Vector& z, const Vector& u) {
    Vector phi(z.size() + u.size());
    phi << z, u;
    return phi;
}

Matrix multi_step_predictor(const ArxPlant& plant, Index rho, Index horizon) {
    plant.validate();
    if (rho < plant.lag()) {
        throw InvalidInputError("multi_step_predictor: rho must cover the plant lag");
    }
    const Index nu = plant.n_u();
    const Index ny = plant.n_y();
    const Index n_phi = rho * (nu + ny) + horizon * nu;

    // Row-block k expresses y_{t+k} over [u_{t-rho..t-1}, y_{t-rho..t-1},
    // u_{t..t+T-1}]; past outputs are basis vectors, future outputs are the
    // previously assembled rows.
    auto past_u_col = [&](Index offset) { return (rho + offset) * nu; };       // offset in [-rho,-1]
    auto past_y_col = [&](Index offset) { return rho * nu + (rho + offset) * ny; };
    auto future_u_col = [&](Index k) { return rho * (nu + ny) + k * nu; };

    Matrix theta = Matrix::Zero(horizon * ny, n_phi);
    for (Index k = 0; k < horizon; ++k) {
        Matrix row = Matrix::Zero(ny, n_phi);
        for (std::size_t i = 0; i < plant.output_coeffs.size(); ++i) {
            const Index src = k - 1 - static_cast<Index>(i);
            const Matrix& a = plant.output_coeffs[i];
            if (src >= 0) {
                row += a * theta.middleRows(src * ny, ny);
            } else {
                row.middleCols(past_y_col(src), ny) += a;
            }
        }
        for (std::size_t j = 0; j < plant.input_coeffs.size(); ++j) {
            const Index src = k - 1 - static_cast<Index>(j);
            const Matrix& b = plant.input_coeffs[j];
            if (src >= 0) {
                row.middleCols(future_u_col(src), nu) += b;
            } else {
                row.middleCols(past_u_col(src), nu) += b;
            }
        }
        theta.middleRows(k * ny, ny) = row;
    }
    return theta;
}

// ----------------------------------------------------------------------------
// CSV persistence
// ----------------------------------------------------------------------------

void save_dataset(const std::string& path, const TrainingRecord& record,
                  const Dimensions& dims, const ArxPlant& plant) {
    if (dims.n_u != 1 || dims.n_y != 1 || plant.n_u() != 1 || plant.n_y() != 1) {
        throw InvalidInputError("save_dataset: CSV format is single-channel only");
    }
    if (record.length() != dims.total_samples()) {
        throw InvalidInputError("save_dataset: record length does not match dims");
    }
    std::ofstream out(path);
    if (!out) {
        throw InvalidInputError("save_dataset: cannot open " + path);
    }

    out << "# rho=" << dims.rho << " T=" << dims.horizon << " N=" << dims.n_cols
        << " seed=" << record.seed << " coeffs=a:";
    for (std::size_t i = 0; i < plant.output_coeffs.size(); ++i) {
        if (i) out << ',';
        out << format_double(plant.output_coeffs[i](0, 0));
    }
    out << "|b:";
    for (std::size_t j = 0; j < plant.input_coeffs.size(); ++j) {
        if (j) out << ',';
        out << format_double(plant.input_coeffs[j](0, 0));
    }
    out << '\n';

    for (Index t = 0; t < record.length(); ++t) {
        out << t << ',' << format_double(record.inputs(0, t)) << ','
            << format_double(record.measured_outputs(0, t)) << ','
            << format_double(record.clean_outputs(0, t)) << '\n';
    }
    if (!out) {
        throw InvalidInputError("save_dataset: write failed for " + path);
    }
}

namespace {

std::vector<double> parse_double_list(const std::string& text, long line) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + item + "'", line);
        }
        if (pos != item.size()) {
            throw ParseError("trailing characters in number '" + item + "'", line);
        }
        values.push_back(v);
    }
    if (values.empty()) {
        throw ParseError("empty coefficient list", line);
    }
    return values;
}

long parse_header_int(const std::string& header, const std::string& key, long line) {
    const std::string token = key + "=";
    const std::size_t pos = header.find(token);
    if (pos == std::string::npos) {
        throw ParseError("header is missing '" + key + "='", line);
    }
    try {
        return std::stol(header.substr(pos + token.size()));
    } catch (const std::exception&) {
        throw ParseError("bad integer for '" + key + "'", line);
    }
}

} // namespace

LoadedDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInputError("load_dataset: cannot open " + path);
    }

    std::string header;
    if (!std::getline(in, header) || header.empty() || header[0] != '#') {
        throw ParseError("expected '# rho=... T=... N=... seed=... coeffs=...' header", 1);
    }

    LoadedDataset data;
    const Index rho = parse_header_int(header, "rho", 1);
    const Index horizon = parse_header_int(header, "T", 1);
    const Index n_cols = parse_header_int(header, "N", 1);
    data.record.seed = static_cast<std::uint64_t>(parse_header_int(header, "seed", 1));
    data.dims = Dimensions{rho, horizon, 1, 1, n_cols};
    data.dims.validate();

    const std::size_t cpos = header.find("coeffs=a:");
    const std::size_t bpos = header.find("|b:");
    if (cpos == std::string::npos || bpos == std::string::npos || bpos < cpos) {
        throw ParseError("header is missing 'coeffs=a:...|b:...'", 1);
    }
    const std::string a_text = header.substr(cpos + 9, bpos - (cpos + 9));
    const std::string b_text = header.substr(bpos + 3);
    data.plant = ArxPlant::siso(parse_double_list(a_text, 1), parse_double_list(b_text, 1));

    const Index total = data.dims.total_samples();
    data.record.inputs = Matrix::Zero(1, total);
    data.record.measured_outputs = Matrix::Zero(1, total);
    data.record.clean_outputs = Matrix::Zero(1, total);

    std::string linebuf;
    long lineno = 1;
    Index t = 0;
    while (std::getline(in, linebuf)) {
        ++lineno;
        if (linebuf.empty()) continue;
        if (t >= total) {
            throw ParseError("more data lines than rho+T+N-1 samples", lineno);
        }
        std::stringstream ss(linebuf);
        std::string field;
        double values[3];
        if (!std::getline(ss, field, ',')) {
            throw ParseError("missing step index", lineno);
        }
        for (int c = 0; c < 3; ++c) {
            if (!std::getline(ss, field, ',')) {
                throw ParseError("expected 4 comma-separated fields", lineno);
            }
            std::size_t pos = 0;
            try {
                values[c] = std::stod(field, &pos);
            } catch (const std::exception&) {
                throw ParseError("malformed number '" + field + "'", lineno);
            }
            if (pos != field.size()) {
                throw ParseError("trailing characters in number '" + field + "'", lineno);
            }
        }
        data.record.inputs(0, t) = values[0];
        data.record.measured_outputs(0, t) = values[1];
        data.record.clean_outputs(0, t) = values[2];
        ++t;
    }
    if (t != total) {
        throw ParseError("file truncated: got " + std::to_string(t) + " data lines, expected " +
                             std::to_string(total),
                         lineno + 1);
    }
    return data;
}

} // namespace ddpc::sysdata
