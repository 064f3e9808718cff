// ddpc — data-driven predictive control toolkit CLI.
//
// Subcommands:
//   bench   Monte-Carlo sweep over training lengths and slack weights
//   verify  numerical certification of the formulation equivalences
//   demo    one benchmark instance, printing J* and the oracle distance

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ddpc/bench.hpp"
#include "ddpc/equivalence.hpp"
#include "ddpc/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInfeasibleCells = 2;
constexpr int kExitConfigError = 3;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven predictive control toolkit"};
    app.require_subcommand(1);

    // --- bench ---
    auto* bench_cmd = app.add_subcommand("bench", "run the Monte-Carlo benchmark sweep");
    std::string config_path;
    std::string outdir = "bench_out";
    bool paper_scale = false;
    int jobs = 0;
    bench_cmd->add_option("--config", config_path, "flat key = value config file");
    bench_cmd->add_option("--out", outdir, "output directory");
    bench_cmd->add_flag("--paper-scale", paper_scale,
                        "full-size grid (200 x 30 realizations)");
    bench_cmd->add_option("--jobs", jobs, "worker threads (default: hardware)");

    // --- verify ---
    auto* verify_cmd = app.add_subcommand("verify", "run the equivalence certification suites");
    int instances = 50;
    std::uint64_t seed = 1234;
    std::string report_path;
    verify_cmd->add_option("--instances", instances, "instances per suite branch");
    verify_cmd->add_option("--seed", seed, "base seed");
    verify_cmd->add_option("--report", report_path,
                           "also write the JSON lines to this file");

    // --- demo ---
    auto* demo_cmd = app.add_subcommand("demo", "solve one benchmark instance");
    std::string demo_config_path;
    demo_cmd->add_option("--config", demo_config_path, "flat key = value config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench_cmd->parsed()) {
            ddpc::bench::ExperimentConfig config;
            try {
                if (!config_path.empty()) {
                    config = ddpc::bench::ExperimentConfig::from_file(config_path);
                }
                if (paper_scale) {
                    config = ddpc::bench::ExperimentConfig::paper_scale(config);
                }
                config.validate();
            } catch (const ddpc::InvalidInputError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kExitConfigError;
            }
            std::cerr << "running sweep into " << outdir << "\n";
            const int infeasible = ddpc::bench::run_bench(config, outdir, jobs, &std::cerr);
            std::cerr << "done; infeasible cells: " << infeasible << "\n";
            return infeasible == 0 ? kExitOk : kExitInfeasibleCells;
        }

        if (verify_cmd->parsed()) {
            ddpc::equivalence::SuiteConfig config;
            config.instances_per_branch = instances;
            config.base_seed = seed;
            std::ofstream report;
            if (!report_path.empty()) {
                report.open(report_path);
                if (!report) {
                    std::cerr << "cannot open " << report_path << "\n";
                    return kExitConfigError;
                }
            }
            std::ostream* sink = report_path.empty() ? &std::cout : &report;
            const auto summary = ddpc::equivalence::run_certification(config, sink);
            std::cerr << "certification: " << summary.passed << " passed, " << summary.failed
                      << " failed, " << summary.skipped << " skipped (of " << summary.total
                      << ")\n";
            return summary.all_passed() ? kExitOk : kExitFailure;
        }

        if (demo_cmd->parsed()) {
            ddpc::bench::ExperimentConfig config;
            try {
                if (!demo_config_path.empty()) {
                    config = ddpc::bench::ExperimentConfig::from_file(demo_config_path);
                }
                config.validate();
            } catch (const ddpc::InvalidInputError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kExitConfigError;
            }
            ddpc::bench::run_demo(config, std::cout);
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
