#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ddpc/errors.hpp"
#include "ddpc/sysdata.hpp"

using namespace ddpc;
using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

namespace {

sysdata::ArxPlant benchmark_plant() {
    return sysdata::ArxPlant::siso({1.2, -0.3, -0.1}, {0.5, -0.4, 0.1});
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_SUITE_BEGIN("sysdata");

TEST_CASE("simulate: null excitation stays at zero") {
    const auto plant = benchmark_plant();
    Rng rng(1);
    const auto sim = sysdata::simulate(plant, Matrix::Zero(1, 50), Matrix::Zero(1, 3),
                                       Matrix::Zero(1, 3), 0.0, rng);
    CHECK(sim.clean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sim.measured.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate: unit step recursion, first samples by hand") {
    // y0 = 0, y1 = 0.5, y2 = 1.2*0.5 + 0.5 - 0.4 = 0.7,
    // y3 = 1.2*0.7 - 0.3*0.5 + 0.5 - 0.4 + 0.1 = 0.89.
    const auto plant = benchmark_plant();
    Rng rng(1);
    const auto sim = sysdata::simulate(plant, Matrix::Ones(1, 4), Matrix::Zero(1, 3),
                                       Matrix::Zero(1, 3), 0.0, rng);
    CHECK(sim.clean(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sim.clean(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sim.clean(0, 2) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(sim.clean(0, 3) == doctest::Approx(0.89).epsilon(1e-12));
}

TEST_CASE("simulate: steady-state gain equals the coefficient-sum formula") {
    // (0.5 - 0.4 + 0.1) / (1 - 1.2 + 0.3 + 0.1) = 1.
    const auto plant = benchmark_plant();
    Rng rng(1);
    const auto sim = sysdata::simulate(plant, Matrix::Ones(1, 2000), Matrix::Zero(1, 3),
                                       Matrix::Zero(1, 3), 0.0, rng);
    CHECK(sim.clean(0, 1999) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("simulate: measurement noise does not feed back into the recursion") {
    const auto plant = benchmark_plant();
    Rng rng_a(5), rng_b(99);
    Matrix inputs(1, 100);
    Rng in_rng(3);
    for (Index t = 0; t < 100; ++t) inputs(0, t) = in_rng.gaussian();
    const auto noisy = sysdata::simulate(plant, inputs, Matrix::Zero(1, 3),
                                         Matrix::Zero(1, 3), 0.5, rng_a);
    const auto clean = sysdata::simulate(plant, inputs, Matrix::Zero(1, 3),
                                         Matrix::Zero(1, 3), 0.0, rng_b);
    CHECK((noisy.clean - clean.clean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((noisy.measured - noisy.clean).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("simulate: divergence guard") {
    const auto plant = sysdata::ArxPlant::siso({2.5}, {1.0});
    Rng rng(1);
    CHECK_THROWS_AS(sysdata::simulate(plant, Matrix::Ones(1, 200), Matrix::Zero(1, 1),
                                      Matrix::Zero(1, 1), 0.0, rng),
                    DivergenceError);
}

TEST_CASE("generate_training is deterministic given the seed") {
    const auto plant = benchmark_plant();
    sysdata::Dimensions dims{4, 5, 1, 1, 30};
    const auto a = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 42);
    const auto b = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 42);
    CHECK((a.inputs - b.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.measured_outputs - b.measured_outputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.clean_outputs - b.clean_outputs).cwiseAbs().maxCoeff() == 0.0);

    const auto c = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 43);
    CHECK((a.inputs - c.inputs).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generate_training: clipped Gaussian input statistics") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(20, 30, 1, 1, 10000);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 7);
    CHECK(rec.inputs.maxCoeff() <= 1.0);
    CHECK(rec.inputs.minCoeff() >= -1.0);
    // Monte-Carlo moments of the clipped N(0, 0.36) distribution.
    const double mean = rec.inputs.mean();
    const double sd = std::sqrt((rec.inputs.array() - mean).square().mean());
    CHECK(sd > 0.5);
    CHECK(sd < 0.65);
}

TEST_CASE("generate_training: signal-to-noise ratio near 10") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(20, 30, 1, 1, 10000);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 11);
    const double mean = rec.clean_outputs.mean();
    const double signal_var = (rec.clean_outputs.array() - mean).square().mean();
    const double snr = signal_var / (0.1 * 0.1);  // power ratio
    CHECK(snr > 7.0);
    CHECK(snr < 13.0);
}

TEST_CASE("dimensions bookkeeping") {
    sysdata::Dimensions dims{20, 30, 1, 1, 70};
    CHECK(dims.n_phi() == 70);
    CHECK(dims.total_samples() == 119);
    const auto from_total = sysdata::Dimensions::from_total_samples(20, 30, 1, 1, 119);
    CHECK(from_total.n_cols == 70);
    CHECK_THROWS_AS((sysdata::Dimensions{0, 30, 1, 1, 70}.validate()), InvalidInputError);
}

TEST_CASE("build_bundle: direct indexing on a tiny record") {
    sysdata::TrainingRecord rec;
    rec.inputs = Matrix(1, 3);
    rec.inputs << 1, 2, 3;
    rec.measured_outputs = Matrix(1, 3);
    rec.measured_outputs << 4, 5, 6;
    rec.clean_outputs = rec.measured_outputs;
    sysdata::Dimensions dims{1, 1, 1, 1, 2};
    const auto bundle = sysdata::build_bundle(rec, dims);
    Matrix Z_expected(2, 2), U_expected(1, 2), Y_expected(1, 2);
    Z_expected << 1, 2, 4, 5;
    U_expected << 2, 3;
    Y_expected << 5, 6;
    CHECK((bundle.Z - Z_expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK((bundle.U - U_expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK((bundle.Y - Y_expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(bundle.Phi.rows() == 3);
}

TEST_CASE("build_bundle: Hankel shift structure") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(4, 5, 1, 1, 60);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 3);
    const auto bundle = sysdata::build_bundle(rec, dims);

    // Column t+1 is column t advanced one sample inside each signal block.
    for (Index t = 0; t + 1 < dims.n_cols; ++t) {
        for (Index k = 0; k + 1 < dims.rho; ++k) {
            CHECK(bundle.Z(k, t + 1) == bundle.Z(k + 1, t));
            CHECK(bundle.Z(dims.rho + k, t + 1) == bundle.Z(dims.rho + k + 1, t));
        }
        for (Index k = 0; k + 1 < dims.horizon; ++k) {
            CHECK(bundle.U(k, t + 1) == bundle.U(k + 1, t));
            CHECK(bundle.Y(k, t + 1) == bundle.Y(k + 1, t));
        }
    }

    // The regressor of training column t is the t-th column of Phi.
    for (Index t : {Index(0), Index(7), dims.n_cols - 1}) {
        const Vector phi = sysdata::build_regressor(bundle.Z.col(t), bundle.U.col(t));
        CHECK((phi - bundle.Phi.col(t)).cwiseAbs().maxCoeff() == 0.0);
    }

    CHECK_THROWS_AS(sysdata::build_bundle(rec, sysdata::Dimensions{4, 5, 1, 1, 61}),
                    InvalidInputError);
}

TEST_CASE("build_regressor concatenates") {
    Vector z(2), u(1);
    z << 1, 2;
    u << 3;
    const Vector phi = sysdata::build_regressor(z, u);
    CHECK(phi.size() == 3);
    CHECK(phi(0) == 1.0);
    CHECK(phi(2) == 3.0);
    CHECK(sysdata::build_regressor(Vector::Zero(4), Vector::Zero(2)).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("benchmark configuration: n_phi = 70 and N = 70 at 119 samples") {
    const auto dims = sysdata::Dimensions::from_total_samples(20, 30, 1, 1, 119);
    CHECK(dims.n_phi() == 70);
    CHECK(dims.n_cols == 70);
}

TEST_CASE("noise-free record satisfies Y = Theta_true * Phi") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(5, 6, 1, 1, 80);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.0, 17);
    const auto bundle = sysdata::build_bundle(rec, dims);
    const Matrix theta = sysdata::multi_step_predictor(plant, dims.rho, dims.horizon);
    CHECK((bundle.Y - theta * bundle.Phi).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("multi_step_predictor needs the window to cover the plant lag") {
    CHECK_THROWS_AS(sysdata::multi_step_predictor(benchmark_plant(), 2, 5),
                    InvalidInputError);
}

TEST_CASE("dataset CSV round-trip is lossless") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(3, 4, 1, 1, 25);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 99);
    const std::string path = temp_path("ddpc_roundtrip.csv");
    sysdata::save_dataset(path, rec, dims, plant);

    const auto loaded = sysdata::load_dataset(path);
    CHECK(loaded.dims.rho == dims.rho);
    CHECK(loaded.dims.n_cols == dims.n_cols);
    CHECK(loaded.record.seed == rec.seed);
    CHECK((loaded.record.inputs - rec.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.record.measured_outputs - rec.measured_outputs).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((loaded.record.clean_outputs - rec.clean_outputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.plant.output_coeffs.size() == 3);
    CHECK(loaded.plant.output_coeffs[0](0, 0) == 1.2);
    std::remove(path.c_str());
}

TEST_CASE("dataset file has one header line plus one line per sample") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(20, 30, 1, 1, 119);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 5);
    const std::string path = temp_path("ddpc_count.csv");
    sysdata::save_dataset(path, rec, dims, plant);

    std::ifstream in(path);
    long lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 120);
    std::remove(path.c_str());
}

TEST_CASE("dataset parse errors carry line numbers") {
    const auto plant = benchmark_plant();
    const auto dims = sysdata::Dimensions::from_total_samples(3, 4, 1, 1, 10);
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 1);
    const std::string path = temp_path("ddpc_broken.csv");
    sysdata::save_dataset(path, rec, dims, plant);

    // Truncate the file.
    {
        std::ifstream in(path);
        std::string all, line;
        for (int i = 0; i < 5 && std::getline(in, line); ++i) all += line + '\n';
        in.close();
        std::ofstream out(path);
        out << all;
    }
    CHECK_THROWS_AS(sysdata::load_dataset(path), ParseError);

    {
        std::ofstream out(path);
        out << "# rho=1 T=1 N=2 seed=0 coeffs=a:1.0|b:1.0\n";
        out << "0,0.5,bad,0.5\n";
    }
    try {
        sysdata::load_dataset(path);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::remove(path.c_str());
}

TEST_CASE("MIMO records refuse the single-channel CSV format") {
    sysdata::ArxPlant plant;
    plant.output_coeffs = {0.5 * Matrix::Identity(2, 2)};
    plant.input_coeffs = {Matrix::Ones(2, 1)};
    sysdata::Dimensions dims{2, 2, 1, 2, 5};
    sysdata::TrainingRecord rec;
    rec.inputs = Matrix::Zero(1, dims.total_samples());
    rec.measured_outputs = Matrix::Zero(2, dims.total_samples());
    rec.clean_outputs = rec.measured_outputs;
    CHECK_THROWS_AS(sysdata::save_dataset(temp_path("ddpc_mimo.csv"), rec, dims, plant),
                    InvalidInputError);
}

TEST_CASE("MIMO simulation runs the matrix recursion") {
    sysdata::ArxPlant plant;
    Matrix a(2, 2), b(2, 1);
    a << 0.5, 0.1, 0.0, 0.4;
    b << 1.0, 0.5;
    plant.output_coeffs = {a};
    plant.input_coeffs = {b};
    Rng rng(1);
    const auto sim = sysdata::simulate(plant, Matrix::Ones(1, 3), Matrix::Zero(1, 1),
                                       Matrix::Zero(2, 1), 0.0, rng);
    CHECK(sim.clean(0, 1) == doctest::Approx(1.0));   // b row 1
    CHECK(sim.clean(1, 1) == doctest::Approx(0.5));   // b row 2
    CHECK(sim.clean(0, 2) == doctest::Approx(0.5 * 1.0 + 0.1 * 0.5 + 1.0));
}

TEST_SUITE_END();
