#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "ddpc/equivalence.hpp"

using namespace ddpc;
using equivalence::DataRegime;
using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

TEST_SUITE_BEGIN("equivalence");

TEST_CASE("random instances land in the requested data regime") {
    for (int i = 0; i < 6; ++i) {
        const auto a = equivalence::make_random_instance(1000 + i, DataRegime::interpolation);
        CHECK(a.dims.n_cols <= a.dims.n_phi());
        const auto b = equivalence::make_random_instance(2000 + i, DataRegime::partial_rank);
        CHECK(b.dims.n_cols > b.dims.n_phi());
        CHECK(b.dims.n_cols < b.dims.n_phi() + b.dims.horizon);
        const auto c = equivalence::make_random_instance(3000 + i, DataRegime::full_rank);
        CHECK(c.dims.n_cols > c.dims.n_phi() + c.dims.horizon);
    }
}

TEST_CASE("direct/indirect check passes across regimes and weights") {
    int checked = 0;
    for (int i = 0; i < 9; ++i) {
        const auto regime = static_cast<DataRegime>(i % 3);
        const auto inst = equivalence::make_random_instance(7000 + i, regime);
        const double beta = (i % 2 == 0) ? 0.5 : 300.0;
        const auto reg = (i % 2 == 0) ? controllers::DeepcRegularizer::l2
                                      : controllers::DeepcRegularizer::projection;
        const auto rep = equivalence::check_direct_indirect(inst.bundle, inst.problem, beta, reg);
        if (rep.skipped) continue;
        ++checked;
        CHECK(rep.pass);
        CHECK(rep.max_u_gap <= rep.tolerance);
    }
    CHECK(checked >= 7);
}

TEST_CASE("interpolation regime reduces both formulations to the predictor controller") {
    const auto inst = equivalence::make_random_instance(81, DataRegime::interpolation);
    const auto model = estimation::fit_least_squares(inst.bundle);
    REQUIRE(model.rank_delta() == 0);

    const auto spc = controllers::solve_spc(inst.problem, model);
    const auto direct = controllers::solve_deepc(inst.problem, inst.bundle,
                                                 controllers::DeepcRegularizer::projection, 5.0);
    const auto indirect = controllers::solve_indirect(inst.problem, model, 0.0, 5.0);
    CHECK((direct.u - spc.u).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((indirect.u - spc.u).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(direct.slack.cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("gamma check skips gracefully when the covariances are singular") {
    const auto inst = equivalence::make_random_instance(91, DataRegime::interpolation);
    const auto rep = equivalence::check_gamma_indirect(inst.bundle, inst.problem, 1.0, 1.0);
    CHECK(rep.skipped);
    CHECK_FALSE(rep.assumption1);
}

TEST_CASE("closed-form check reports the dominance margin") {
    const auto inst =
        equivalence::make_random_instance(101, DataRegime::full_rank, /*unconstrained=*/true);
    const auto model = estimation::fit_least_squares(inst.bundle);
    const auto rep = equivalence::check_closed_form(model, inst.problem, 0.7, 40.0);
    CHECK(rep.pass);
    CHECK(rep.psd_margin >= -1e-9);
    CHECK(rep.max_u_gap <= 1e-6 * (1.0 + 10.0));
}

TEST_CASE("factorization identities hold on the benchmark shape") {
    // rho=20, T=30 with enough columns for an invertible LQ diagonal.
    sysdata::Dimensions dims{20, 30, 1, 1, 120};
    const auto plant = sysdata::ArxPlant::siso({1.2, -0.3, -0.1}, {0.5, -0.4, 0.1});
    const auto rec = sysdata::generate_training(plant, dims, 0.6, {-1, 1}, 0.1, 77);
    const auto bundle = sysdata::build_bundle(rec, dims);
    const auto rep = equivalence::check_factorization_identities(bundle, 7);
    CHECK(rep.pass);
    CHECK(rep.sigma_delta_identity_err <= 1e-8);
    CHECK(rep.sigma_phi_identity_err <= 1e-8);
    CHECK(rep.pinv_norm_identity_err <= 1e-9);
}

TEST_CASE("pinv norm identity: what actually fails off the range") {
    // For x outside range(M) the reconstruction step x = M M+ x breaks, but
    // the weighted-norm identity itself still holds: both pseudo-inverses
    // annihilate the orthogonal complement. The identity's range hypothesis
    // is sufficient, not necessary, so no inequality is asserted here.
    Matrix M(3, 2);
    M << 1, 0, 0, 1, 0, 0;
    Vector x(3);
    x << 0.3, -0.2, 2.0;  // third coordinate is off-range
    const Vector recon = M * (numkit::pinv(M) * x);
    CHECK((recon - x).cwiseAbs().maxCoeff() > 1.0);

    const double lhs = (numkit::pinv(M) * x).squaredNorm();
    const double rhs = numkit::weighted_sqnorm(x, numkit::pinv(M * M.transpose()));
    CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("reports serialize to stable JSON lines") {
    const auto inst = equivalence::make_random_instance(111, DataRegime::full_rank);
    auto rep = equivalence::check_direct_indirect(inst.bundle, inst.problem, 10.0,
                                                  controllers::DeepcRegularizer::l2);
    rep.seed = 111;
    const auto j = nlohmann::json::parse(rep.to_json_line());
    CHECK(j["check"] == "direct_indirect");
    CHECK(j["seed"] == 111);
    CHECK(j["verdict"] == "pass");
    CHECK(j.contains("max_u_gap"));

    // Bit-for-bit reproducible from the same seed and descriptor.
    const auto inst2 = equivalence::make_random_instance(111, DataRegime::full_rank);
    auto rep2 = equivalence::check_direct_indirect(inst2.bundle, inst2.problem, 10.0,
                                                   controllers::DeepcRegularizer::l2);
    rep2.seed = 111;
    CHECK(rep.to_json_line() == rep2.to_json_line());
}

TEST_CASE("small certification run: zero failures, streamed output") {
    equivalence::SuiteConfig config;
    config.instances_per_branch = 6;
    config.identity_bundles = 3;
    config.base_seed = 99;
    std::ostringstream lines;
    const auto summary = equivalence::run_certification(config, &lines);
    CHECK(summary.failed == 0);
    CHECK(summary.passed > 0);
    CHECK(summary.all_passed());

    // One JSON object per line.
    std::istringstream in(lines.str());
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        const auto parsed = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        CHECK_FALSE(parsed.is_discarded());
        ++count;
    }
    CHECK(count == summary.total);
}

TEST_CASE("output-box instances keep the equivalence") {
    int checked = 0;
    for (int i = 0; i < 6; ++i) {
        const auto inst = equivalence::make_random_instance(
            2200 + i, DataRegime::full_rank, /*unconstrained=*/false, /*with_output_box=*/true);
        REQUIRE(inst.problem.output_box.has_value());
        const auto rep = equivalence::check_direct_indirect(
            inst.bundle, inst.problem, 2.0, controllers::DeepcRegularizer::projection);
        if (rep.skipped) continue;
        ++checked;
        CHECK(rep.pass);
    }
    CHECK(checked >= 4);
}

TEST_SUITE_END();
