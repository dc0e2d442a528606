#include "mjls/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mjls/errors.hpp"
#include "mjls/moments.hpp"
#include "mjls/stability.hpp"

namespace mjls {

namespace {

constexpr double kBlowUp = 1e100;

double max_change(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, (a[i] - b[i]).norm());
    }
    return d;
}

double max_norm(const std::vector<Matrix>& a) {
    double d = 0.0;
    for (const auto& m : a) {
        d = std::max(d, m.norm());
    }
    return d;
}

void require_family(const MjlsModel& model, const std::vector<Matrix>& mats, const char* what) {
    if (mats.size() != model.num_modes) {
        throw DimensionError(std::string(what) + ": expected one matrix per mode");
    }
    for (const auto& m : mats) {
        if (m.rows() != model.state_dim || m.cols() != model.state_dim) {
            throw DimensionError(std::string(what) + ": matrices must be state_dim square");
        }
    }
}

Matrix gain_from_averaged(const MjlsModel& model, const std::vector<Matrix>& p, const std::vector<Matrix>& x) {
    const Eigen::Index n = model.state_dim, m = model.input_dim;
    Matrix lhs = Matrix::Zero(m * n, m * n);
    Matrix rhs = Matrix::Zero(m, n);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        const Matrix btp = model.b[i].transpose() * p[i];
        lhs += kron(x[i], model.r[i] + btp * model.b[i]);
        rhs += btp * model.a[i] * x[i];
    }
    const Vector l = -(pinv(lhs) * vec(rhs));
    return devec(l, m, n);
}

// Right-hand side of the moment recursion with the stationary mode distribution.
std::vector<Matrix> moment_update(const MjlsModel& model, const std::vector<Matrix>& closed, const std::vector<Matrix>& x,
                                  const ModeDistribution& pi) {
    const Eigen::Index n = model.state_dim;
    std::vector<Matrix> contrib;
    contrib.reserve(model.num_modes);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        contrib.push_back(closed[i] * x[i] * closed[i].transpose() +
                          pi[i] * model.h[i] * model.noise_cov * model.h[i].transpose());
    }
    std::vector<Matrix> out(model.num_modes, Matrix::Zero(n, n));
    for (std::size_t j = 0; j < model.num_modes; ++j) {
        for (std::size_t i = 0; i < model.num_modes; ++i) {
            out[j] += model.transition(i, j) * contrib[i];
        }
        out[j] = symmetrize(out[j]);
    }
    return out;
}

std::vector<Matrix> multiplier_update(const MjlsModel& model, const std::vector<Matrix>& closed,
                                      const std::vector<Matrix>& p, const Matrix& gain) {
    std::vector<Matrix> out;
    out.reserve(model.num_modes);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        out.push_back(symmetrize(closed[i].transpose() * p[i] * closed[i] + model.q[i] +
                                 gain.transpose() * model.r[i] * gain));
    }
    return out;
}

struct Iterate {
    std::vector<Matrix> x;
    std::vector<Matrix> lambdas;
};

Iterate random_start(const MjlsModel& model, std::uint64_t seed, std::size_t restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(restart), static_cast<std::uint32_t>(restart >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index n = model.state_dim;
    auto draw = [&] {
        Matrix g(n, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            for (Eigen::Index r = 0; r < n; ++r) {
                g(r, c) = normal(rng);
            }
        }
        return Matrix(g * g.transpose() + 1e-3 * Matrix::Identity(n, n));
    };
    Iterate it;
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        it.x.push_back(draw());
    }
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        it.lambdas.push_back(draw());
    }
    return it;
}

// Moments and multipliers belonging to a known stabilizing gain.
std::optional<Iterate> warm_start(const MjlsModel& model, const Matrix& gain) {
    require_gain_shape(model, gain);
    const std::vector<Matrix> closed = closed_loop_matrices(model, gain);
    if (!ms_stable_spectral(closed, model.transition).is_ms_stable) {
        return std::nullopt;
    }
    Iterate it;
    it.x = stationary_second_moment_direct(model, gain).x;
    const Eigen::Index n = model.state_dim;
    for (auto& x : it.x) {
        x += 1e-3 * Matrix::Identity(n, n);
    }
    std::vector<Matrix> weights;
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        weights.push_back(model.q[i] + gain.transpose() * model.r[i] * gain);
    }
    // Lambda_i = A~_i^T (sum_j p_ij Lambda_j) A~_i + W_i has the coupled Lyapunov form.
    StabilityReport lyap = ms_stable_lyapunov(closed, model.transition, weights);
    if (lyap.lyapunov_solution.size() != model.num_modes) {
        return std::nullopt;
    }
    it.lambdas = std::move(lyap.lyapunov_solution);
    return it;
}

SynthesisResult run_restart(const MjlsModel& model, const SynthesisOptions& opts, std::size_t restart,
                            const ModeDistribution& pi) {
    Iterate it;
    std::optional<Iterate> warm;
    if (restart == 0 && opts.initial_gain) {
        warm = warm_start(model, *opts.initial_gain);
    }
    it = warm ? std::move(*warm) : random_start(model, opts.seed, restart);

    SynthesisResult res;
    res.restart = restart;
    std::vector<Matrix> p = averaged_multipliers(model.transition, it.lambdas);
    Matrix gain = Matrix::Zero(model.input_dim, model.state_dim);
    bool blew_up = false;
    for (std::size_t k = 0; k < opts.max_iters; ++k) {
        gain = gain_from_averaged(model, p, it.x);
        const std::vector<Matrix> closed = closed_loop_matrices(model, gain);
        std::vector<Matrix> x_next = moment_update(model, closed, it.x, pi);
        std::vector<Matrix> l_next = multiplier_update(model, closed, p, gain);
        const double dx = max_change(x_next, it.x);
        const double dl = max_change(l_next, it.lambdas);
        it.x = std::move(x_next);
        it.lambdas = std::move(l_next);
        p = averaged_multipliers(model.transition, it.lambdas);
        res.trace.push_back(dx);
        res.iterations = k + 1;
        if (!std::isfinite(dx) || !std::isfinite(dl) || max_norm(it.x) > kBlowUp || max_norm(it.lambdas) > kBlowUp ||
            !gain.allFinite()) {
            blew_up = true;
            break;
        }
        if (dx <= opts.tol && dl <= opts.tol) {
            res.converged = true;
            break;
        }
    }

    res.gain = gain;
    res.x_infs = it.x;
    res.lambdas = it.lambdas;
    res.p_mats = p;
    if (blew_up) {
        res.spectral_radius = std::numeric_limits<double>::infinity();
        res.residuals = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()};
        res.cost = std::numeric_limits<double>::infinity();
        return res;
    }
    const StabilityReport cert = certify_closed_loop(model, gain);
    res.spectral_radius = *cert.spectral_radius_m;
    res.certified_stable = cert.is_ms_stable;
    res.residuals = optimality_residuals(model, gain, res.lambdas, res.x_infs);
    res.min_lambda_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& l : res.lambdas) {
        res.min_lambda_eigenvalue = std::min(res.min_lambda_eigenvalue, min_symmetric_eigenvalue(l));
    }
    res.cost = res.certified_stable ? infinite_horizon_cost(model, gain, stationary_second_moment_direct(model, gain).x)
                                    : std::numeric_limits<double>::infinity();
    return res;
}

} // namespace

double OptimalityResiduals::max() const {
    return std::max({multiplier, moment, gain});
}

std::vector<Matrix> averaged_multipliers(const TransitionMatrix& t, const std::vector<Matrix>& lambdas) {
    if (lambdas.size() != t.num_modes()) {
        throw DimensionError("averaged_multipliers: expected one multiplier per mode");
    }
    std::vector<Matrix> p;
    p.reserve(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        Matrix acc = Matrix::Zero(lambdas[0].rows(), lambdas[0].cols());
        for (std::size_t j = 0; j < lambdas.size(); ++j) {
            acc += t(i, j) * lambdas[j];
        }
        p.push_back(std::move(acc));
    }
    return p;
}

OptimalityResiduals optimality_residuals(const MjlsModel& model, const Matrix& gain, const std::vector<Matrix>& lambdas,
                                         const std::vector<Matrix>& x_infs) {
    require_family(model, lambdas, "optimality_residuals");
    require_family(model, x_infs, "optimality_residuals");
    const std::vector<Matrix> closed = closed_loop_matrices(model, gain);
    const std::vector<Matrix> p = averaged_multipliers(model.transition, lambdas);
    const ModeDistribution pi = stationary_distribution(model.transition);

    OptimalityResiduals res;
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        const Matrix defect = closed[i].transpose() * p[i] * closed[i] + model.q[i] +
                              gain.transpose() * model.r[i] * gain - lambdas[i];
        res.multiplier = std::max(res.multiplier, defect.norm());
    }
    res.moment = max_change(moment_update(model, closed, x_infs, pi), x_infs);
    Matrix stationarity = Matrix::Zero(model.input_dim, model.state_dim);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        const Matrix btp = model.b[i].transpose() * p[i];
        stationarity += (model.r[i] + btp * model.b[i]) * gain * x_infs[i] + btp * model.a[i] * x_infs[i];
    }
    res.gain = stationarity.norm();
    return res;
}

Matrix solve_gain_step(const MjlsModel& model, const std::vector<Matrix>& lambdas, const std::vector<Matrix>& x_infs) {
    require_family(model, lambdas, "solve_gain_step");
    require_family(model, x_infs, "solve_gain_step");
    return gain_from_averaged(model, averaged_multipliers(model.transition, lambdas), x_infs);
}

SynthesisResult synthesize(const MjlsModel& model, const SynthesisOptions& opts) {
    if (opts.num_restarts == 0) {
        throw ValidationError("synthesize: num_restarts must be positive");
    }
    if (!(opts.tol > 0.0)) {
        throw ValidationError("synthesize: tol must be positive");
    }
    const ModeDistribution pi = stationary_distribution(model.transition);

    std::vector<SynthesisResult> runs;
    runs.reserve(opts.num_restarts);
    for (std::size_t r = 0; r < opts.num_restarts; ++r) {
        runs.push_back(run_restart(model, opts, r, pi));
    }

    std::vector<RestartSummary> summaries;
    for (const auto& r : runs) {
        summaries.push_back({r.restart, r.converged, r.certified_stable, r.iterations, r.spectral_radius, r.cost});
    }

    auto pick = [&](bool want_converged) -> const SynthesisResult* {
        const SynthesisResult* best = nullptr;
        for (const auto& r : runs) {
            if (r.certified_stable && r.converged == want_converged && (!best || r.cost < best->cost)) {
                best = &r;
            }
        }
        return best;
    };

    const bool any_converged = std::any_of(runs.begin(), runs.end(), [](const auto& r) { return r.converged; });
    const SynthesisResult* best = pick(true);
    if (!best && !any_converged) {
        best = pick(false);
    }
    if (!best) {
        std::string detail = any_converged ? "converged restarts did not stabilize the closed loop"
                                           : "no restart converged or stabilized the closed loop";
        throw NoStabilizingGainFound("synthesize: " + detail + " (" + std::to_string(opts.num_restarts) +
                                     " restarts)");
    }
    SynthesisResult out = *best;
    out.restarts = std::move(summaries);
    return out;
}

BaselineGains chizeck_baseline(const MjlsModel& model, const BaselineOptions& opts) {
    const std::size_t modes = model.num_modes;
    const Eigen::Index n = model.state_dim;
    std::vector<Matrix> p(modes, Matrix::Zero(n, n));
    std::vector<Matrix> gains(modes, Matrix::Zero(model.input_dim, n));

    BaselineGains out;
    bool converged = false;
    for (std::size_t k = 0; k < opts.max_iters; ++k) {
        const std::vector<Matrix> e = averaged_multipliers(model.transition, p);
        std::vector<Matrix> next(modes);
        for (std::size_t i = 0; i < modes; ++i) {
            const Matrix bte = model.b[i].transpose() * e[i];
            const Matrix s = model.r[i] + bte * model.b[i];
            Eigen::LLT<Matrix> llt(symmetrize(s));
            if (llt.info() != Eigen::Success) {
                throw NotStabilizableError("chizeck_baseline: R_i + B_i^T E_i B_i lost positive definiteness");
            }
            gains[i] = -llt.solve(bte * model.a[i]);
            next[i] = symmetrize(model.q[i] + model.a[i].transpose() * e[i] * model.a[i] +
                                 model.a[i].transpose() * bte.transpose() * gains[i]);
        }
        const double change = max_change(next, p);
        const double scale = std::max(1.0, max_norm(next));
        p = std::move(next);
        out.iterations = k + 1;
        if (!std::isfinite(change) || scale > kBlowUp) {
            throw NotStabilizableError("chizeck_baseline: coupled Riccati recursion diverged");
        }
        if (change <= opts.tol * scale) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NoConvergenceError("chizeck_baseline: no fixed point after " + std::to_string(opts.max_iters) +
                                 " iterations");
    }
    // Gains consistent with the final Riccati matrices.
    const std::vector<Matrix> e = averaged_multipliers(model.transition, p);
    for (std::size_t i = 0; i < modes; ++i) {
        const Matrix bte = model.b[i].transpose() * e[i];
        gains[i] = -symmetrize(model.r[i] + bte * model.b[i]).llt().solve(bte * model.a[i]);
    }
    const StabilityReport cert = ms_stable_spectral(closed_loop_matrices(model, gains), model.transition);
    out.spectral_radius = *cert.spectral_radius_m;
    if (!cert.is_ms_stable) {
        throw NotStabilizableError("chizeck_baseline: mode-dependent gains do not stabilize (rho = " +
                                   std::to_string(out.spectral_radius) + ")");
    }
    out.mode_gains = std::move(gains);
    out.riccati_mats = std::move(p);
    return out;
}

} // namespace mjls
