#include "mjls/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "json_util.hpp"
#include "mjls/errors.hpp"
#include "mjls/model_io.hpp"
#include "mjls/moments.hpp"
#include "mjls/sim.hpp"
#include "mjls/stability.hpp"
#include "mjls/stabilizability.hpp"
#include "mjls/synthesis.hpp"

namespace mjls {

using detail::json;

namespace {

struct CommonConfig {
    std::string model_path;
    std::string out_path;
    std::size_t transition = 1;
    std::size_t noise = 1;
    std::uint64_t seed = 0;
    double tol = 1e-10;
    std::size_t max_iters = 10000;
    std::size_t restarts = 8;
};

struct CliConfig {
    CommonConfig common;
    std::string gain_spec = "zero";
    std::string controller_spec = "proposed";
    std::string method = "both";
    std::string gain_out;
    std::string x0_csv = "0";
    std::size_t runs = 10000;
    std::size_t horizon = 100;
    std::size_t theta0 = 0; // 1-based; 0 means stationary
    std::size_t threads = 0;
    std::string csv_path;
    std::string trajectory_path;
    std::size_t starts = 4;
    std::size_t inner_iters = 200;
    std::string grid_path;
    std::vector<double> grid_range{-3.0, 1.0, -4.0, 1.0};
    std::size_t grid_points = 41;
};

void add_common(CLI::App* sub, CommonConfig& c, bool with_solver) {
    sub->add_option("--model", c.model_path, "model file")->required();
    sub->add_option("--out", c.out_path, "report file (JSON)");
    sub->add_option("--transition", c.transition, "which T block to use (1-based)")->check(CLI::PositiveNumber);
    sub->add_option("--noise", c.noise, "which W block to use (1-based)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "random seed");
    if (with_solver) {
        sub->add_option("--tol", c.tol, "convergence tolerance")->check(CLI::Range(1e-300, 1.0));
        sub->add_option("--max-iters", c.max_iters, "iteration cap")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
        sub->add_option("--restarts", c.restarts, "random restarts of the gain iteration")
            ->check(CLI::Range(std::size_t{1}, std::size_t{10000}));
    }
}

json common_json(const std::string& sub, const CommonConfig& c) {
    json j;
    j["subcommand"] = sub;
    j["model"] = c.model_path;
    j["transition"] = c.transition;
    j["noise"] = c.noise;
    j["seed"] = c.seed;
    j["tol"] = c.tol;
    j["max_iters"] = c.max_iters;
    j["restarts"] = c.restarts;
    return j;
}

MjlsModel load(const CommonConfig& c) {
    return load_model(c.model_path, ModelSelection{c.transition, c.noise});
}

SynthesisOptions synthesis_options(const CommonConfig& c) {
    SynthesisOptions o;
    o.tol = c.tol;
    o.max_iters = c.max_iters;
    o.seed = c.seed;
    o.num_restarts = c.restarts;
    return o;
}

void emit(const json& report, const CommonConfig& c) {
    if (!c.out_path.empty()) {
        write_text_file(c.out_path, report.dump(2) + "\n");
    }
}

std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << std::fixed << v;
    return os.str();
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << std::scientific << v;
    return os.str();
}

Vector parse_x0(const std::string& csv, Eigen::Index n) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ValidationError("--x0: cannot parse '" + item + "'");
        }
    }
    if (vals.size() == 1 && n > 1) {
        vals.assign(static_cast<std::size_t>(n), vals.front());
    }
    if (static_cast<Eigen::Index>(vals.size()) != n) {
        throw ValidationError("--x0: expected " + std::to_string(n) + " comma-separated values");
    }
    return Eigen::Map<Vector>(vals.data(), n);
}

// Gains for `--gain` / `--controller`: zero, proposed, chizeck or file:PATH.
struct ResolvedGains {
    std::string kind;
    std::vector<Matrix> gains; // one constant gain, or one per mode for chizeck
    json details;
};

ResolvedGains resolve_gains(const std::string& spec, const MjlsModel& model, const CommonConfig& c) {
    ResolvedGains r;
    if (spec == "zero") {
        r.kind = "zero";
        r.gains = {Matrix::Zero(model.input_dim, model.state_dim)};
    } else if (spec == "proposed") {
        r.kind = "proposed";
        const SynthesisResult s = synthesize(model, synthesis_options(c));
        r.gains = {s.gain};
        r.details["converged"] = s.converged;
        r.details["certified_stable"] = s.certified_stable;
    } else if (spec == "chizeck") {
        r.kind = "chizeck";
        const BaselineGains b = chizeck_baseline(model);
        r.gains = b.mode_gains;
        r.details["riccati"] = detail::matrices_to_json(b.riccati_mats);
    } else if (spec.rfind("file:", 0) == 0) {
        r.kind = "file";
        r.gains = {load_gain(spec.substr(5))};
        require_gain_shape(model, r.gains.front());
        r.details["path"] = spec.substr(5);
    } else {
        throw ValidationError("unknown gain/controller '" + spec + "' (zero|proposed|chizeck|file:PATH)");
    }
    return r;
}

json stability_json(const StabilityReport& s) {
    json j;
    j["is_ms_stable"] = s.is_ms_stable;
    j["method"] = s.method == StabilityMethod::SpectralRadius ? "spectral"
                  : s.method == StabilityMethod::Lyapunov     ? "lyapunov"
                                                              : "both";
    if (s.spectral_radius_m) {
        j["spectral_radius"] = *s.spectral_radius_m;
    }
    if (s.method != StabilityMethod::SpectralRadius) {
        j["lyapunov_feasible"] = s.lyapunov_feasible;
        j["lyapunov_solution"] = detail::matrices_to_json(s.lyapunov_solution);
    }
    return j;
}

int cmd_synthesize(const CliConfig& cfg, std::ostream& out) {
    const MjlsModel model = load(cfg.common);
    const SynthesisResult s = synthesize(model, synthesis_options(cfg.common));

    json report;
    report["config"] = common_json("synthesize", cfg.common);
    json res;
    res["gain"] = detail::matrix_to_json(s.gain);
    res["lambdas"] = detail::matrices_to_json(s.lambdas);
    res["p_mats"] = detail::matrices_to_json(s.p_mats);
    res["x_infs"] = detail::matrices_to_json(s.x_infs);
    res["residuals"] = {{"multiplier", s.residuals.multiplier}, {"moment", s.residuals.moment}, {"gain", s.residuals.gain}};
    res["iterations"] = s.iterations;
    res["converged"] = s.converged;
    res["certified_stable"] = s.certified_stable;
    res["spectral_radius"] = s.spectral_radius;
    res["cost"] = s.cost;
    res["min_lambda_eigenvalue"] = s.min_lambda_eigenvalue;
    res["restart"] = s.restart + 1;
    json restarts = json::array();
    for (const auto& r : s.restarts) {
        restarts.push_back({{"restart", r.index + 1},
                            {"converged", r.converged},
                            {"certified_stable", r.certified_stable},
                            {"iterations", r.iterations},
                            {"spectral_radius", std::isfinite(r.spectral_radius) ? json(r.spectral_radius) : json(nullptr)},
                            {"cost", std::isfinite(r.cost) ? json(r.cost) : json(nullptr)}});
    }
    res["restarts"] = restarts;
    report["result"] = res;
    emit(report, cfg.common);

    std::string gain_out = cfg.gain_out;
    if (gain_out.empty() && !cfg.common.out_path.empty()) {
        gain_out = cfg.common.out_path + ".gain";
    }
    if (!gain_out.empty()) {
        write_text_file(gain_out, dump_gain(s.gain));
    }

    out << "gain: " << detail::matrix_to_json(s.gain).dump() << '\n';
    out << "converged: " << (s.converged ? "true" : "false") << " (" << s.iterations << " iterations)\n";
    out << "certified_stable: " << (s.certified_stable ? "true" : "false") << '\n';
    out << "spectral_radius: " << fmt(s.spectral_radius) << '\n';
    out << "cost: " << sci(s.cost) << '\n';
    out << "residuals: " << sci(s.residuals.multiplier) << ' ' << sci(s.residuals.moment) << ' '
        << sci(s.residuals.gain) << '\n';
    return s.converged ? kExitOk : kExitNoConvergence;
}

int cmd_stability(const CliConfig& cfg, std::ostream& out) {
    const MjlsModel model = load(cfg.common);
    const ResolvedGains g = resolve_gains(cfg.gain_spec, model, cfg.common);
    const std::vector<Matrix> closed =
        g.gains.size() == 1 ? closed_loop_matrices(model, g.gains.front()) : closed_loop_matrices(model, g.gains);

    StabilityReport s;
    if (cfg.method == "spectral") {
        s = ms_stable_spectral(closed, model.transition);
    } else if (cfg.method == "lyapunov") {
        s = ms_stable_lyapunov(closed, model.transition);
    } else {
        s = ms_stable_both(closed, model.transition);
    }

    json report;
    json config = common_json("stability", cfg.common);
    config["gain"] = cfg.gain_spec;
    config["method"] = cfg.method;
    report["config"] = config;
    json res = stability_json(s);
    res["gains"] = detail::matrices_to_json(g.gains);
    report["result"] = res;
    emit(report, cfg.common);

    if (s.spectral_radius_m) {
        out << "spectral_radius: " << fmt(*s.spectral_radius_m) << '\n';
    }
    if (s.method != StabilityMethod::SpectralRadius) {
        out << "lyapunov_feasible: " << (s.lyapunov_feasible ? "true" : "false") << '\n';
    }
    out << "ms_stable: " << (s.is_ms_stable ? "true" : "false") << '\n';
    return s.is_ms_stable ? kExitOk : kExitNotStable;
}

int cmd_stabilizability(const CliConfig& cfg, std::ostream& out) {
    const MjlsModel model = load(cfg.common);
    StabilizabilityOptions o;
    o.seed = cfg.common.seed;
    o.starts = cfg.starts;
    o.max_inner_iters = cfg.inner_iters;
    const StabilizabilityResult s = minimize_spectral_radius(model, o);

    json report;
    json config = common_json("stabilizability", cfg.common);
    config["starts"] = cfg.starts;
    config["max_inner_iters"] = cfg.inner_iters;
    config["epsilon_schedule"] = o.epsilon_schedule;
    config["inner_tol"] = o.inner_tol;
    report["config"] = config;
    json res;
    res["best_gain"] = detail::matrix_to_json(s.best_gain);
    res["best_rho"] = s.best_rho;
    res["is_stabilizable"] = s.is_stabilizable;
    res["best_start"] = s.best_start + 1;
    json starts = json::array();
    for (const auto& t : s.trace) {
        json steps = json::array();
        for (const auto& st : t.steps) {
            steps.push_back({{"epsilon", st.epsilon}, {"smoothed", st.smoothed}, {"rho", st.rho}, {"iterations", st.iterations}});
        }
        starts.push_back({{"start", t.start + 1},
                          {"initial_gain", detail::matrix_to_json(t.initial_gain)},
                          {"steps", steps},
                          {"polished_gain", detail::matrix_to_json(t.polished_gain)},
                          {"polished_rho", t.polished_rho}});
    }
    res["trace"] = starts;
    report["result"] = res;
    emit(report, cfg.common);

    if (!cfg.grid_path.empty()) {
        if (cfg.grid_range.size() != 4) {
            throw ValidationError("--grid-range expects lo1,hi1,lo2,hi2");
        }
        const auto samples = spectral_radius_grid(model, Matrix::Zero(model.input_dim, model.state_dim),
                                                  cfg.grid_range[0], cfg.grid_range[1], cfg.grid_range[2],
                                                  cfg.grid_range[3], cfg.grid_points);
        std::ostringstream csv;
        csv << std::setprecision(17) << "l1,l2,rho\n";
        for (const auto& g : samples) {
            csv << g.l1 << ',' << g.l2 << ',' << g.rho << '\n';
        }
        write_text_file(cfg.grid_path, csv.str());
    }

    out << "best_gain: " << detail::matrix_to_json(s.best_gain).dump() << '\n';
    out << "best_rho: " << fmt(s.best_rho) << '\n';
    out << "stabilizable: " << (s.is_stabilizable ? "true" : "false") << '\n';
    return s.is_stabilizable ? kExitOk : kExitNotStable;
}

int cmd_simulate(const CliConfig& cfg, std::ostream& out) {
    const MjlsModel model = load(cfg.common);
    const Vector x0 = parse_x0(cfg.x0_csv, model.state_dim);
    const ResolvedGains g = resolve_gains(cfg.controller_spec, model, cfg.common);
    const Controller controller = g.kind == "zero"      ? Controller::zero(model.input_dim, model.state_dim)
                                  : g.gains.size() == 1 ? Controller::constant_gain(g.gains.front())
                                                        : Controller::mode_gain(g.gains);
    if (cfg.theta0 > model.num_modes) {
        throw ValidationError("--theta0 must lie in 1.." + std::to_string(model.num_modes));
    }
    const ModeDistribution theta0 = cfg.theta0 == 0 ? stationary_distribution(model.transition)
                                                    : ModeDistribution::point_mass(model.num_modes, cfg.theta0 - 1);
    MonteCarloOptions o;
    o.horizon = cfg.horizon;
    o.runs = cfg.runs;
    o.master_seed = cfg.common.seed;
    o.threads = cfg.threads;
    o.keep_trajectories = cfg.trajectory_path.empty() ? 0 : 1;
    const SimulationReport sim = monte_carlo(model, controller, x0, theta0, o);

    json report;
    json config = common_json("simulate", cfg.common);
    config["controller"] = cfg.controller_spec;
    config["x0"] = detail::vector_to_json(x0);
    config["theta0"] = cfg.theta0 == 0 ? json("stationary") : json(cfg.theta0);
    config["runs"] = cfg.runs;
    config["horizon"] = cfg.horizon;
    config["noise_family"] = "gaussian";
    report["config"] = config;
    json res;
    res["gains"] = detail::matrices_to_json(g.gains);
    res["mean_cost"] = sim.mean_cost;
    res["std_cost"] = sim.std_cost;
    res["runs"] = sim.runs;
    res["horizon"] = sim.horizon;
    report["result"] = res;
    emit(report, cfg.common);

    if (!cfg.csv_path.empty()) {
        std::ostringstream csv;
        csv << std::setprecision(17) << "run,time_averaged_cost\n";
        for (std::size_t r = 0; r < sim.per_run_costs.size(); ++r) {
            csv << r + 1 << ',' << sim.per_run_costs[r] << '\n';
        }
        csv << "mean," << sim.mean_cost << '\n' << "std," << sim.std_cost << '\n';
        write_text_file(cfg.csv_path, csv.str());
    }
    if (!cfg.trajectory_path.empty()) {
        const RunRecord& rec = sim.trajectories.front();
        std::ostringstream csv;
        csv << std::setprecision(17) << 'k';
        for (Eigen::Index i = 0; i < model.state_dim; ++i) {
            csv << ",x" << i + 1;
        }
        for (Eigen::Index i = 0; i < model.input_dim; ++i) {
            csv << ",u" << i + 1;
        }
        csv << ",mode\n";
        for (std::size_t k = 0; k < rec.states.size(); ++k) {
            csv << k;
            for (Eigen::Index i = 0; i < model.state_dim; ++i) {
                csv << ',' << rec.states[k](i);
            }
            for (Eigen::Index i = 0; i < model.input_dim; ++i) {
                csv << ',' << rec.inputs[k](i);
            }
            csv << ',' << rec.modes[k] + 1 << '\n';
        }
        write_text_file(cfg.trajectory_path, csv.str());
    }

    out << "runs: " << sim.runs << ", horizon: " << sim.horizon << '\n';
    out << "mean_cost: " << sci(sim.mean_cost) << '\n';
    out << "std_cost: " << sci(sim.std_cost) << '\n';
    return kExitOk;
}

int cmd_cost(const CliConfig& cfg, std::ostream& out) {
    const MjlsModel model = load(cfg.common);
    const ResolvedGains g = resolve_gains(cfg.gain_spec, model, cfg.common);
    if (g.gains.size() != 1) {
        throw ValidationError("cost: needs a constant gain (zero, proposed or file:PATH)");
    }
    const Matrix& gain = g.gains.front();
    StationaryMomentOptions mo;
    mo.tol = cfg.common.tol;
    mo.max_iters = std::max<std::size_t>(cfg.common.max_iters, 100000);
    const StationaryMoments sm = stationary_second_moment(model, gain, mo);
    const double cost = infinite_horizon_cost(model, gain, sm.state.x);

    json report;
    json config = common_json("cost", cfg.common);
    config["gain"] = cfg.gain_spec;
    report["config"] = config;
    json res;
    res["gain"] = detail::matrix_to_json(gain);
    res["cost"] = cost;
    res["x_infs"] = detail::matrices_to_json(sm.state.x);
    res["iterations"] = sm.iterations;
    res["spectral_radius"] = sm.spectral_radius;
    report["result"] = res;
    emit(report, cfg.common);

    out << "spectral_radius: " << fmt(sm.spectral_radius) << '\n';
    out << "cost: " << sci(cost) << '\n';
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Constant-gain state feedback for Markov jump linear systems without mode observation", "mjls"};
    app.require_subcommand(1);
    CliConfig cfg;

    auto* synth = app.add_subcommand("synthesize", "compute the constant mode-independent gain");
    add_common(synth, cfg.common, true);
    synth->add_option("--gain-out", cfg.gain_out, "gain matrix file (default: <out>.gain)");

    auto* stab = app.add_subcommand("stability", "mean-square stability of a closed loop");
    add_common(stab, cfg.common, true);
    stab->add_option("--gain", cfg.gain_spec, "zero|proposed|chizeck|file:PATH");
    stab->add_option("--method", cfg.method, "spectral|lyapunov|both")
        ->check(CLI::IsMember({"spectral", "lyapunov", "both"}));

    auto* stz = app.add_subcommand("stabilizability", "minimize rho(M) over constant gains");
    add_common(stz, cfg.common, false);
    stz->add_option("--starts", cfg.starts, "optimizer starts")->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
    stz->add_option("--max-iters", cfg.inner_iters, "inner optimizer iterations per epsilon")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
    stz->add_option("--grid", cfg.grid_path, "write rho over a gain grid as CSV");
    stz->add_option("--grid-range", cfg.grid_range, "lo1,hi1,lo2,hi2")->delimiter(',')->expected(4);
    stz->add_option("--grid-points", cfg.grid_points, "points per axis")->check(CLI::Range(std::size_t{2}, std::size_t{2001}));

    auto* sim = app.add_subcommand("simulate", "Monte Carlo simulation of the controlled system");
    add_common(sim, cfg.common, true);
    sim->add_option("--controller", cfg.controller_spec, "proposed|chizeck|zero|file:PATH");
    sim->add_option("--x0", cfg.x0_csv, "initial state, comma separated");
    sim->add_option("--runs", cfg.runs, "Monte Carlo runs")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    sim->add_option("--horizon", cfg.horizon, "steps per run")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    sim->add_option("--theta0", cfg.theta0, "initial mode (1-based); default stationary draw")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    sim->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    sim->add_option("--csv", cfg.csv_path, "per-run costs CSV");
    sim->add_option("--trajectory", cfg.trajectory_path, "trajectory CSV of the first run");

    auto* cost = app.add_subcommand("cost", "stationary second moment and infinite-horizon cost of a gain");
    add_common(cost, cfg.common, true);
    cost->add_option("--gain", cfg.gain_spec, "zero|proposed|file:PATH");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (synth->parsed()) {
            return cmd_synthesize(cfg, out);
        }
        if (stab->parsed()) {
            return cmd_stability(cfg, out);
        }
        if (stz->parsed()) {
            return cmd_stabilizability(cfg, out);
        }
        if (sim->parsed()) {
            return cmd_simulate(cfg, out);
        }
        return cmd_cost(cfg, out);
    } catch (const NotStableError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotStable;
    } catch (const NoStabilizingGainFound& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotStable;
    } catch (const NotStabilizableError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotStable;
    } catch (const NoConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const Error& e) {
        // Diagnostics may span lines; keep the first on the error stream line.
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ';');
        err << "error: " << msg << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

} // namespace mjls
