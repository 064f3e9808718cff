#include "ddpc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ddpc/errors.hpp"

namespace ddpc::bench {

namespace {

constexpr std::uint64_t kTrainStream = 100;
constexpr std::uint64_t kNoiseStream = 200;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --------------------------------------------------------------------------
// Shared per-sweep state
// --------------------------------------------------------------------------

struct ExpandedController {
    std::string id;
    bool has_lambda2 = false;
    double lambda2 = 0.0;
};

std::vector<ExpandedController> expand_controllers(const ExperimentConfig& config) {
    std::vector<ExpandedController> out;
    for (const std::string& c : config.controllers) {
        if (c == "deepc") {
            for (double l2 : config.lambda2_grid) out.push_back({c, true, l2});
        } else {
            out.push_back({c, false, 0.0});
        }
    }
    return out;
}

struct TrainingContext {
    sysdata::Dimensions dims;
    std::uint64_t train_seed = 0;
    estimation::PredictorModel model_ls;
    estimation::PredictorModel model_causal;
    bool has_causal = false;
};

TrainingContext build_training_context(const ExperimentConfig& config,
                                       const sysdata::ArxPlant& plant, Index nbar,
                                       std::uint64_t train_seed, bool need_ls,
                                       bool need_causal) {
    TrainingContext ctx;
    ctx.dims = sysdata::Dimensions::from_total_samples(config.rho, config.horizon, 1, 1, nbar);
    ctx.train_seed = train_seed;
    const auto record = sysdata::generate_training(
        plant, ctx.dims, config.sigma_u, {config.u_min, config.u_max}, config.sigma_y,
        train_seed);
    const auto bundle = sysdata::build_bundle(record, ctx.dims);
    if (need_ls) ctx.model_ls = estimation::fit_least_squares(bundle);
    if (need_causal) {
        ctx.model_causal = estimation::fit_causal(bundle);
        ctx.has_causal = true;
    }
    return ctx;
}

RunResult evaluate_cell(const ExperimentConfig& config, const sysdata::ArxPlant& plant,
                        const OracleReference& oracle, const TrainingContext& ctx,
                        const ExpandedController& ctrl, std::uint64_t noise_seed) {
    RunResult r;
    r.controller = ctrl.id;
    r.nbar = ctx.dims.total_samples();
    r.has_lambda2 = ctrl.has_lambda2;
    r.lambda2 = ctrl.lambda2;
    r.train_seed = ctx.train_seed;
    r.noise_seed = noise_seed;

    controllers::ControlProblem p = tracking_problem(config, ctx.dims);
    p.z = measured_past_window(config, ctx.dims, noise_seed);

    try {
        controllers::Solution sol;
        if (ctrl.id == "deepc") {
            sol = controllers::solve_indirect(p, ctx.model_ls, 0.0, ctrl.lambda2);
        } else if (ctrl.id == "spc") {
            sol = controllers::solve_spc(p, ctx.model_ls);
        } else if (ctrl.id == "cspc") {
            sol = controllers::solve_spc(p, ctx.model_causal);
        } else if (ctrl.id == "oracle") {
            sol.u = oracle.u;
            sol.y_hat = oracle.y;
            sol.slack = Vector::Zero(oracle.y.size());
            sol.qp.status = qpcore::QpStatus::optimal;
        } else {
            throw InvalidInputError("unknown controller '" + ctrl.id + "'");
        }

        const Vector response = open_loop_response(plant, sol.u, ctx.dims.horizon);
        r.j_star = p.cost(sol.u, response);
        const Vector dy = response - oracle.y;
        const Vector du = sol.u - oracle.u;
        r.j_oracle_dist = dy.dot(p.Q * dy) + du.dot(p.R * du);
        r.slack_ms = sol.slack.squaredNorm() / static_cast<double>(sol.slack.size());
        r.qp_status = qpcore::to_string(sol.qp.status);
    } catch (const InfeasibleError&) {
        r.feasible = false;
        r.j_star = r.j_oracle_dist = r.slack_ms = std::nan("");
        r.qp_status = "infeasible";
    } catch (const std::exception& e) {
        r.feasible = false;
        r.j_star = r.j_oracle_dist = r.slack_ms = std::nan("");
        r.qp_status = std::string("error: ") + e.what();
    }
    return r;
}

double quantile(std::vector<double> v, double prob) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double h = prob * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// --------------------------------------------------------------------------
// Config parsing helpers
// --------------------------------------------------------------------------

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInputError("config: bad number '" + v + "' for key '" + key + "'");
    }
}

} // namespace

controllers::ControlProblem tracking_problem(const ExperimentConfig& config,
                                             const sysdata::Dimensions& dims) {
    controllers::ControlProblem p;
    p.z = Vector::Zero(dims.n_z());
    p.u_ref = Vector::Zero(dims.horizon * dims.n_u);
    p.y_ref = Vector::Constant(dims.horizon * dims.n_y, config.setpoint);
    p.Q = config.q_weight * Matrix::Identity(dims.horizon * dims.n_y, dims.horizon * dims.n_y);
    p.R = config.r_weight * Matrix::Identity(dims.horizon * dims.n_u, dims.horizon * dims.n_u);
    p.input_box = controllers::BoxBounds{Vector::Constant(dims.n_u, config.u_min),
                                         Vector::Constant(dims.n_u, config.u_max)};
    return p;
}

Vector measured_past_window(const ExperimentConfig& config, const sysdata::Dimensions& dims,
                            std::uint64_t noise_seed) {
    Rng rng(noise_seed);
    Vector z = Vector::Zero(dims.n_z());
    for (Index i = dims.rho * dims.n_u; i < dims.n_z(); ++i) {
        z(i) = rng.gaussian(config.sigma_y);
    }
    return z;
}

Vector open_loop_response(const sysdata::ArxPlant& plant, const Vector& u, Index horizon) {
    Matrix inputs(plant.n_u(), horizon);
    for (Index t = 0; t < horizon; ++t) inputs.col(t) = u.segment(t * plant.n_u(), plant.n_u());
    Matrix zero_u = Matrix::Zero(plant.n_u(), plant.lag());
    Matrix zero_y = Matrix::Zero(plant.n_y(), plant.lag());
    Rng unused(0);
    const auto sim = sysdata::simulate(plant, inputs, zero_u, zero_y, 0.0, unused);
    Vector y(horizon * plant.n_y());
    for (Index t = 0; t < horizon; ++t) y.segment(t * plant.n_y(), plant.n_y()) = sim.clean.col(t);
    return y;
}

OracleReference oracle_reference(const ExperimentConfig& config,
                                 const sysdata::Dimensions& dims) {
    const auto plant = config.plant();
    const Index window = std::max(dims.rho, plant.lag());
    Matrix zero_u = Matrix::Zero(plant.n_u(), window);
    Matrix zero_y = Matrix::Zero(plant.n_y(), window);
    controllers::ControlProblem p = tracking_problem(config, dims);
    const auto sol = controllers::solve_oracle(p, plant, zero_u, zero_y);

    OracleReference oracle;
    oracle.u = sol.u;
    oracle.y = open_loop_response(plant, sol.u, dims.horizon);
    oracle.j_star = p.cost(sol.u, oracle.y);
    return oracle;
}

void ExperimentConfig::validate() const {
    if (a_coeffs.empty() && b_coeffs.empty()) {
        throw InvalidInputError("config: plant coefficients are empty");
    }
    if (rho < 1 || horizon < 1) throw InvalidInputError("config: rho and horizon must be >= 1");
    if (q_weight <= 0 || r_weight <= 0) throw InvalidInputError("config: weights must be > 0");
    if (!(u_min <= u_max)) throw InvalidInputError("config: empty input box");
    if (sigma_u <= 0 || sigma_y < 0) throw InvalidInputError("config: bad noise levels");
    if (nbar_grid.empty() || lambda2_grid.empty()) {
        throw InvalidInputError("config: grids must be nonempty");
    }
    for (Index nbar : nbar_grid) {
        if (nbar < rho + horizon) {
            throw InvalidInputError("config: nbar " + std::to_string(nbar) +
                                    " is shorter than rho + horizon");
        }
    }
    for (double l2 : lambda2_grid) {
        if (l2 < 0) throw InvalidInputError("config: lambda2 must be >= 0");
    }
    if (train_realizations < 1 || noise_realizations < 1) {
        throw InvalidInputError("config: realization counts must be >= 1");
    }
    if (controllers.empty()) throw InvalidInputError("config: controller list is empty");
    for (const std::string& c : controllers) {
        if (c != "deepc" && c != "spc" && c != "cspc" && c != "oracle") {
            throw InvalidInputError("config: unknown controller '" + c + "'");
        }
    }
}

sysdata::ArxPlant ExperimentConfig::plant() const {
    return sysdata::ArxPlant::siso(a_coeffs, b_coeffs);
}

ExperimentConfig ExperimentConfig::paper_scale() { return paper_scale(ExperimentConfig{}); }

ExperimentConfig ExperimentConfig::paper_scale(const ExperimentConfig& base) {
    ExperimentConfig c = base;
    c.nbar_grid = {119, 200, 350, 600, 1000, 1800, 3200, 5600, 10000};
    c.lambda2_grid = {1.0, 10.0, 100.0, 1000.0};
    c.train_realizations = 200;
    c.noise_realizations = 30;
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("config: cannot open " + path);

    ExperimentConfig c;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidInputError("config: expected key = value at line " +
                                    std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "rho") {
            c.rho = static_cast<Index>(parse_double(value, key));
        } else if (key == "horizon") {
            c.horizon = static_cast<Index>(parse_double(value, key));
        } else if (key == "q_weight") {
            c.q_weight = parse_double(value, key);
        } else if (key == "r_weight") {
            c.r_weight = parse_double(value, key);
        } else if (key == "setpoint") {
            c.setpoint = parse_double(value, key);
        } else if (key == "u_min") {
            c.u_min = parse_double(value, key);
        } else if (key == "u_max") {
            c.u_max = parse_double(value, key);
        } else if (key == "sigma_u") {
            c.sigma_u = parse_double(value, key);
        } else if (key == "sigma_y") {
            c.sigma_y = parse_double(value, key);
        } else if (key == "base_seed") {
            c.base_seed = static_cast<std::uint64_t>(parse_double(value, key));
        } else if (key == "train_realizations") {
            c.train_realizations = static_cast<int>(parse_double(value, key));
        } else if (key == "noise_realizations") {
            c.noise_realizations = static_cast<int>(parse_double(value, key));
        } else if (key == "nbar_grid") {
            c.nbar_grid.clear();
            for (const auto& item : split_list(value)) {
                c.nbar_grid.push_back(static_cast<Index>(parse_double(item, key)));
            }
        } else if (key == "lambda2_grid") {
            c.lambda2_grid.clear();
            for (const auto& item : split_list(value)) {
                c.lambda2_grid.push_back(parse_double(item, key));
            }
        } else if (key == "a_coeffs") {
            c.a_coeffs.clear();
            for (const auto& item : split_list(value)) {
                c.a_coeffs.push_back(parse_double(item, key));
            }
        } else if (key == "b_coeffs") {
            c.b_coeffs.clear();
            for (const auto& item : split_list(value)) {
                c.b_coeffs.push_back(parse_double(item, key));
            }
        } else if (key == "controllers") {
            c.controllers = split_list(value);
        } else {
            throw InvalidInputError("config: unknown key '" + key + "' at line " +
                                    std::to_string(lineno));
        }
    }
    c.validate();
    return c;
}

std::uint64_t train_seed_for(const ExperimentConfig& config, std::size_t nbar_index,
                             int realization) {
    return derive_seed(config.base_seed,
                       {kTrainStream, nbar_index, static_cast<std::uint64_t>(realization)});
}

std::uint64_t noise_seed_for(const ExperimentConfig& config, std::size_t nbar_index,
                             int realization, int noise_index) {
    return derive_seed(config.base_seed,
                       {kNoiseStream, nbar_index, static_cast<std::uint64_t>(realization),
                        static_cast<std::uint64_t>(noise_index)});
}

RunResult run_single(const ExperimentConfig& config, const std::string& controller,
                     bool has_lambda2, double lambda2, Index nbar, std::uint64_t train_seed,
                     std::uint64_t noise_seed) {
    config.validate();
    const auto plant = config.plant();
    const auto dims =
        sysdata::Dimensions::from_total_samples(config.rho, config.horizon, 1, 1, nbar);
    const OracleReference oracle = oracle_reference(config, dims);
    const bool need_causal = controller == "cspc";
    const bool need_ls = controller == "deepc" || controller == "spc";
    const TrainingContext ctx =
        build_training_context(config, plant, nbar, train_seed, need_ls, need_causal);
    return evaluate_cell(config, plant, oracle, ctx, {controller, has_lambda2, lambda2},
                         noise_seed);
}

SweepOutput run_sweep(const ExperimentConfig& config, int jobs, std::ostream* csv,
                      std::ostream* progress) {
    config.validate();
    const auto plant = config.plant();
    const auto expanded = expand_controllers(config);

    const std::size_t n_nbar = config.nbar_grid.size();
    const std::size_t n_train = static_cast<std::size_t>(config.train_realizations);
    const std::size_t n_noise = static_cast<std::size_t>(config.noise_realizations);
    const std::size_t rows_per_ctx = expanded.size() * n_noise;
    const std::size_t n_ctx = n_nbar * n_train;

    const bool need_ls = std::any_of(expanded.begin(), expanded.end(), [](const auto& e) {
        return e.id == "deepc" || e.id == "spc";
    });
    const bool need_causal = std::any_of(expanded.begin(), expanded.end(),
                                         [](const auto& e) { return e.id == "cspc"; });

    // The exact-model reference does not depend on the training data.
    const auto dims0 =
        sysdata::Dimensions::from_total_samples(config.rho, config.horizon, 1, 1,
                                                config.nbar_grid.front());
    const OracleReference oracle = oracle_reference(config, dims0);

    SweepOutput out;
    out.results.resize(n_ctx * rows_per_ctx);

    if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) jobs = 2;
    }
    jobs = std::min<int>(jobs, static_cast<int>(n_ctx));

    std::atomic<std::size_t> next_ctx{0};
    std::vector<char> ctx_done(n_ctx, 0);
    std::mutex flush_mutex;
    std::size_t flushed = 0;

    if (csv) (*csv) << results_csv_header() << '\n';

    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next_ctx.fetch_add(1);
            if (c >= n_ctx) return;
            const std::size_t nbar_idx = c / n_train;
            const int r = static_cast<int>(c % n_train);
            const Index nbar = config.nbar_grid[nbar_idx];
            const std::uint64_t tseed = train_seed_for(config, nbar_idx, r);

            TrainingContext ctx;
            bool ctx_ok = true;
            std::string ctx_error;
            try {
                ctx = build_training_context(config, plant, nbar, tseed, need_ls, need_causal);
            } catch (const std::exception& e) {
                ctx_ok = false;
                ctx_error = e.what();
            }

            for (std::size_t e = 0; e < expanded.size(); ++e) {
                for (std::size_t j = 0; j < n_noise; ++j) {
                    const std::uint64_t nseed =
                        noise_seed_for(config, nbar_idx, r, static_cast<int>(j));
                    RunResult res;
                    if (ctx_ok) {
                        res = evaluate_cell(config, plant, oracle, ctx, expanded[e], nseed);
                    } else {
                        res.controller = expanded[e].id;
                        res.nbar = nbar;
                        res.has_lambda2 = expanded[e].has_lambda2;
                        res.lambda2 = expanded[e].lambda2;
                        res.train_seed = tseed;
                        res.noise_seed = nseed;
                        res.feasible = false;
                        res.j_star = res.j_oracle_dist = res.slack_ms = std::nan("");
                        res.qp_status = "error: " + ctx_error;
                    }
                    out.results[c * rows_per_ctx + e * n_noise + j] = std::move(res);
                }
            }

            // Stream completed contexts in deterministic order.
            std::lock_guard<std::mutex> lock(flush_mutex);
            ctx_done[c] = 1;
            while (flushed < n_ctx && ctx_done[flushed]) {
                if (csv) {
                    for (std::size_t k = 0; k < rows_per_ctx; ++k) {
                        (*csv) << to_csv_row(out.results[flushed * rows_per_ctx + k]) << '\n';
                    }
                }
                ++flushed;
                if (progress && flushed % std::max<std::size_t>(1, n_ctx / 20) == 0) {
                    (*progress) << "  " << flushed << "/" << n_ctx
                                << " training contexts done\n";
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& r : out.results) {
        if (!r.feasible) ++out.infeasible_cells;
    }
    return out;
}

std::vector<SummaryRow> aggregate(const std::vector<RunResult>& results) {
    struct Key {
        std::string controller;
        double lambda2;
        bool has_lambda2;
        Index nbar;
        bool operator<(const Key& o) const {
            if (controller != o.controller) return controller < o.controller;
            if (lambda2 != o.lambda2) return lambda2 < o.lambda2;
            return nbar < o.nbar;
        }
    };
    struct Acc {
        std::vector<double> j_star, j_oracle, slack;
        int cells = 0, infeasible = 0;
    };
    std::map<Key, Acc> groups;
    for (const auto& r : results) {
        Acc& acc = groups[{r.controller, r.has_lambda2 ? r.lambda2 : 0.0, r.has_lambda2, r.nbar}];
        ++acc.cells;
        if (!r.feasible) {
            ++acc.infeasible;
            continue;
        }
        acc.j_star.push_back(r.j_star);
        acc.j_oracle.push_back(r.j_oracle_dist);
        acc.slack.push_back(r.slack_ms);
    }

    std::vector<SummaryRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        SummaryRow row;
        row.controller = key.controller;
        row.nbar = key.nbar;
        row.has_lambda2 = key.has_lambda2;
        row.lambda2 = key.lambda2;
        row.cells = acc.cells;
        row.infeasible = acc.infeasible;
        row.j_star_q1 = quantile(acc.j_star, 0.25);
        row.j_star_med = quantile(acc.j_star, 0.5);
        row.j_star_q3 = quantile(acc.j_star, 0.75);
        row.j_oracle_q1 = quantile(acc.j_oracle, 0.25);
        row.j_oracle_med = quantile(acc.j_oracle, 0.5);
        row.j_oracle_q3 = quantile(acc.j_oracle, 0.75);
        row.slack_q1 = quantile(acc.slack, 0.25);
        row.slack_med = quantile(acc.slack, 0.5);
        row.slack_q3 = quantile(acc.slack, 0.75);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string results_csv_header() {
    return "controller,nbar,lambda2,train_seed,noise_seed,feasible,j_star,j_oracle_dist,"
           "slack_ms,qp_status";
}

std::string to_csv_row(const RunResult& r) {
    std::ostringstream os;
    os << r.controller << ',' << r.nbar << ',' << (r.has_lambda2 ? fmt(r.lambda2) : "") << ','
       << r.train_seed << ',' << r.noise_seed << ',' << (r.feasible ? 1 : 0) << ','
       << fmt(r.j_star) << ',' << fmt(r.j_oracle_dist) << ',' << fmt(r.slack_ms) << ','
       << r.qp_status;
    return os.str();
}

void write_results_csv(const std::vector<RunResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open " + path);
    out << results_csv_header() << '\n';
    for (const auto& r : results) out << to_csv_row(r) << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open " + path);
    out << "controller,nbar,lambda2,cells,infeasible,"
           "j_star_q1,j_star_med,j_star_q3,"
           "j_oracle_q1,j_oracle_med,j_oracle_q3,"
           "slack_q1,slack_med,slack_q3\n";
    for (const auto& r : rows) {
        out << r.controller << ',' << r.nbar << ',' << (r.has_lambda2 ? fmt(r.lambda2) : "")
            << ',' << r.cells << ',' << r.infeasible << ',' << fmt(r.j_star_q1) << ','
            << fmt(r.j_star_med) << ',' << fmt(r.j_star_q3) << ',' << fmt(r.j_oracle_q1) << ','
            << fmt(r.j_oracle_med) << ',' << fmt(r.j_oracle_q3) << ',' << fmt(r.slack_q1) << ','
            << fmt(r.slack_med) << ',' << fmt(r.slack_q3) << '\n';
    }
}

// --------------------------------------------------------------------------
// SVG figures
// --------------------------------------------------------------------------

namespace {

struct Series {
    std::string label;
    std::string color;
    std::string dash;  // empty for solid
    std::vector<std::pair<double, double>> points;  // (nbar, value)
};

std::string series_label(const SummaryRow& r) {
    if (r.has_lambda2) {
        std::ostringstream os;
        os << r.controller << " l2=" << r.lambda2;
        return os.str();
    }
    return r.controller;
}

void style_for(const SummaryRow& r, std::size_t lambda_rank, Series& s) {
    static const char* palette[] = {"#1f77b4", "#9467bd", "#2ca02c", "#ff7f0e",
                                    "#17becf", "#8c564b"};
    if (r.controller == "spc") {
        s.color = "#000000";
        s.dash = "2,3";
    } else if (r.controller == "cspc") {
        s.color = "#d62728";
        s.dash = "8,3,2,3";
    } else if (r.controller == "oracle") {
        s.color = "#7f7f7f";
        s.dash = "1,2";
    } else {
        s.color = palette[lambda_rank % 6];
        s.dash.clear();
    }
}

void write_log_log_figure(const std::string& path, const std::string& title,
                          const std::string& ylabel, const std::vector<Series>& series) {
    const double width = 760, height = 480;
    const double ml = 70, mr = 180, mt = 40, mb = 55;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            if (std::isfinite(y) && y > 0) {
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (!(xmax > 0)) return;
    if (!(ymax > 0)) {
        ymin = 1e-12;
        ymax = 1.0;
    }
    if (ymin == ymax) {
        ymin /= 10;
        ymax *= 10;
    }
    // Values that are exactly zero are drawn clipped to the axis floor.
    const double floor_y = ymin / 10.0;
    const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
    const double ly0 = std::log10(floor_y), ly1 = std::log10(ymax) + 0.2;

    auto px = [&](double x) {
        return ml + (std::log10(x) - lx0) / std::max(lx1 - lx0, 1e-12) * (width - ml - mr);
    };
    auto py = [&](double y) {
        const double ly = std::log10(std::max(y, floor_y));
        return height - mb - (ly - ly0) / std::max(ly1 - ly0, 1e-12) * (height - mt - mb);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<!-- data table\n";
    for (const auto& s : series) {
        svg << "# " << s.label << '\n';
        for (const auto& [x, y] : s.points) svg << x << ' ' << fmt(y) << '\n';
    }
    svg << "-->\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"22\" font-size=\"15\" "
        << "text-anchor=\"middle\" font-family=\"sans-serif\">" << title << "</text>\n";

    // Axes.
    svg << "<line x1=\"" << ml << "\" y1=\"" << (height - mb) << "\" x2=\"" << (width - mr)
        << "\" y2=\"" << (height - mb) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << (height - mb) << "\" stroke=\"black\"/>\n";

    for (int d = static_cast<int>(std::ceil(lx0)); d <= static_cast<int>(std::floor(lx1));
         ++d) {
        const double x = px(std::pow(10.0, d));
        svg << "<line x1=\"" << x << "\" y1=\"" << (height - mb) << "\" x2=\"" << x
            << "\" y2=\"" << (height - mb + 5) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << (height - mb + 20)
            << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">1e" << d
            << "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(ly0)); d <= static_cast<int>(std::floor(ly1));
         ++d) {
        const double y = py(std::pow(10.0, d));
        svg << "<line x1=\"" << (ml - 5) << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\""
            << y << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
            << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">1e" << d
            << "</text>\n";
    }
    svg << "<text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"" << (height - 12)
        << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << "training samples</text>\n";
    svg << "<text x=\"18\" y=\"" << (mt + (height - mt - mb) / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "transform=\"rotate(-90 18 " << (mt + (height - mt - mb) / 2) << ")\">" << ylabel
        << "</text>\n";

    double legend_y = mt + 10;
    for (const auto& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
        if (!s.dash.empty()) svg << " stroke-dasharray=\"" << s.dash << "\"";
        svg << " points=\"";
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(y)) continue;
            svg << px(x) << ',' << py(y) << ' ';
        }
        svg << "\"/>\n";
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(y)) continue;
            svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\""
                << s.color << "\"/>\n";
        }
        svg << "<line x1=\"" << (width - mr + 12) << "\" y1=\"" << legend_y << "\" x2=\""
            << (width - mr + 40) << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
            << "\" stroke-width=\"1.8\"";
        if (!s.dash.empty()) svg << " stroke-dasharray=\"" << s.dash << "\"";
        svg << "/>\n";
        svg << "<text x=\"" << (width - mr + 46) << "\" y=\"" << (legend_y + 4)
            << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_y += 18;
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open " + path);
    out << svg.str();
}

std::vector<Series> collect_series(const std::vector<SummaryRow>& rows,
                                   double SummaryRow::*field, bool deepc_only,
                                   bool skip_oracle) {
    std::vector<double> lambdas;
    for (const auto& r : rows) {
        if (r.has_lambda2 && std::find(lambdas.begin(), lambdas.end(), r.lambda2) ==
                                 lambdas.end()) {
            lambdas.push_back(r.lambda2);
        }
    }
    std::sort(lambdas.begin(), lambdas.end());

    std::map<std::string, Series> by_label;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        if (deepc_only && !r.has_lambda2) continue;
        if (skip_oracle && r.controller == "oracle") continue;
        const std::string label = series_label(r);
        auto it = by_label.find(label);
        if (it == by_label.end()) {
            Series s;
            s.label = label;
            const std::size_t rank = r.has_lambda2
                                         ? static_cast<std::size_t>(
                                               std::find(lambdas.begin(), lambdas.end(),
                                                         r.lambda2) -
                                               lambdas.begin())
                                         : 0;
            style_for(r, rank, s);
            it = by_label.emplace(label, std::move(s)).first;
            order.push_back(label);
        }
        it->second.points.emplace_back(static_cast<double>(r.nbar), r.*field);
    }
    std::vector<Series> out;
    for (const auto& label : order) {
        auto s = by_label[label];
        std::sort(s.points.begin(), s.points.end());
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

void write_figures(const std::vector<SummaryRow>& rows, const std::string& outdir) {
    write_log_log_figure(outdir + "/fig_slack.svg", "Mean squared slack vs training length",
                         "median slack (mean squared)",
                         collect_series(rows, &SummaryRow::slack_med, /*deepc_only=*/true,
                                        /*skip_oracle=*/true));
    write_log_log_figure(outdir + "/fig_cost.svg", "Tracking criterion vs training length",
                         "median cost",
                         collect_series(rows, &SummaryRow::j_star_med, false, false));
    write_log_log_figure(outdir + "/fig_oracle.svg",
                         "Dissimilarity from the exact-model controller", "median distance",
                         collect_series(rows, &SummaryRow::j_oracle_med, false, true));
}

int run_bench(const ExperimentConfig& config, const std::string& outdir, int jobs,
              std::ostream* progress) {
    config.validate();
    std::filesystem::create_directories(outdir);
    std::ofstream csv(outdir + "/results.csv");
    if (!csv) throw InvalidInputError("cannot open " + outdir + "/results.csv");

    SweepOutput sweep = run_sweep(config, jobs, &csv, progress);
    csv.close();

    const auto rows = aggregate(sweep.results);
    write_summary_csv(rows, outdir + "/summary.csv");
    write_figures(rows, outdir);
    return sweep.infeasible_cells;
}

void run_demo(const ExperimentConfig& config, std::ostream& out) {
    config.validate();
    const std::size_t nbar_idx = config.nbar_grid.size() / 2;
    const Index nbar = config.nbar_grid[nbar_idx];
    const std::uint64_t tseed = train_seed_for(config, nbar_idx, 0);
    const std::uint64_t nseed = noise_seed_for(config, nbar_idx, 0, 0);

    out << "single instance: nbar=" << nbar << " train_seed=" << tseed
        << " noise_seed=" << nseed << "\n";
    out << "controller      lambda2      J*           J_oracle      slack_ms\n";
    auto expanded = expand_controllers(config);
    expanded.push_back({"oracle", false, 0.0});
    for (const auto& e : expanded) {
        const RunResult r =
            run_single(config, e.id, e.has_lambda2, e.lambda2, nbar, tseed, nseed);
        char line[160];
        std::snprintf(line, sizeof(line), "%-15s %-12s %-12.6g %-13.6g %-12.6g", e.id.c_str(),
                      e.has_lambda2 ? fmt(e.lambda2).c_str() : "-", r.j_star, r.j_oracle_dist,
                      r.slack_ms);
        out << line << (r.feasible ? "" : "  [" + r.qp_status + "]") << "\n";
    }
}

} // namespace ddpc::bench
