#include "mjls/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mjls/errors.hpp"

namespace mjls {

Controller Controller::constant_gain(Matrix gain) {
    return Controller(Kind::ConstantGain, {std::move(gain)});
}

Controller Controller::mode_gain(std::vector<Matrix> gains) {
    if (gains.empty()) {
        throw DimensionError("mode-gain controller needs at least one gain");
    }
    return Controller(Kind::ModeGain, std::move(gains));
}

Controller Controller::zero(Eigen::Index input_dim, Eigen::Index state_dim) {
    return Controller(Kind::Zero, {Matrix::Zero(input_dim, state_dim)});
}

Vector Controller::input(const Vector& x, std::size_t mode) const {
    return kind_ == Kind::ModeGain ? Vector(gains_[mode] * x) : Vector(gains_.front() * x);
}

void Controller::check(const MjlsModel& model) const {
    if (kind_ == Kind::ModeGain && gains_.size() != model.num_modes) {
        throw DimensionError("mode-gain controller must supply one gain per mode");
    }
    for (const auto& g : gains_) {
        require_gain_shape(model, g);
    }
}

NoiseSampler::NoiseSampler(const Matrix& cov) {
    if (cov.rows() != cov.cols()) {
        throw DimensionError("noise covariance must be square");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Vector NoiseSampler::operator()(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = normal(rng);
    }
    return factor_ * z;
}

namespace {

template <class Probs>
std::size_t draw_index(const Probs& probs, Eigen::Index count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    double acc = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index j = 0; j < count; ++j) {
        if (probs(j) > 0.0) {
            last_positive = j;
        }
        acc += probs(j);
        if (u < acc) {
            return static_cast<std::size_t>(j);
        }
    }
    // Rounding left u just above the cumulative sum.
    return static_cast<std::size_t>(last_positive);
}

} // namespace

std::size_t sample_mode(const TransitionMatrix& t, std::size_t mode, std::mt19937_64& rng) {
    const auto row = t.entries().row(static_cast<Eigen::Index>(mode)).transpose();
    return draw_index(row, row.size(), rng);
}

std::size_t sample_mode(const ModeDistribution& dist, std::mt19937_64& rng) {
    return draw_index(dist.probs(), dist.probs().size(), rng);
}

std::mt19937_64 run_stream(std::uint64_t master_seed, std::size_t run) {
    const auto r = static_cast<std::uint64_t>(run);
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32), 0x6d6a6c73u};
    return std::mt19937_64(seq);
}

namespace {

RunRecord simulate(const MjlsModel& model, const Controller& controller, const NoiseSampler& noise, const Vector& x0,
                   std::size_t theta0, std::size_t horizon, std::mt19937_64& rng, bool record) {
    RunRecord rec;
    if (record) {
        rec.states.reserve(horizon + 1);
        rec.inputs.reserve(horizon + 1);
        rec.modes.reserve(horizon + 1);
        rec.stage_costs.reserve(horizon + 1);
    }
    Vector x = x0;
    std::size_t mode = theta0;
    double total = 0.0;
    for (std::size_t k = 0; k <= horizon; ++k) {
        const Vector u = controller.input(x, mode);
        const double stage = x.dot(model.q[mode] * x) + u.dot(model.r[mode] * u);
        total += stage;
        if (record) {
            rec.states.push_back(x);
            rec.inputs.push_back(u);
            rec.modes.push_back(mode);
            rec.stage_costs.push_back(stage);
        }
        if (k == horizon) {
            break;
        }
        const Vector w = noise(rng);
        x = model.a[mode] * x + model.b[mode] * u + model.h[mode] * w;
        mode = sample_mode(model.transition, mode, rng);
    }
    rec.time_averaged_cost = total / static_cast<double>(horizon);
    return rec;
}

void check_run_inputs(const MjlsModel& model, const Controller& controller, const Vector& x0, std::size_t horizon) {
    controller.check(model);
    if (x0.size() != model.state_dim) {
        throw DimensionError("initial state has the wrong dimension");
    }
    if (horizon == 0) {
        throw ValidationError("horizon must be at least 1");
    }
}

} // namespace

RunRecord sample_run(const MjlsModel& model, const Controller& controller, const Vector& x0, std::size_t theta0,
                     std::size_t horizon, std::mt19937_64& rng, bool record) {
    check_run_inputs(model, controller, x0, horizon);
    if (theta0 >= model.num_modes) {
        throw DimensionError("initial mode out of range");
    }
    return simulate(model, controller, NoiseSampler(model.noise_cov), x0, theta0, horizon, rng, record);
}

SimulationReport monte_carlo(const MjlsModel& model, const Controller& controller, const Vector& x0,
                             const ModeDistribution& theta0_dist, const MonteCarloOptions& opts) {
    check_run_inputs(model, controller, x0, opts.horizon);
    if (opts.runs == 0) {
        throw ValidationError("monte_carlo: runs must be at least 1");
    }
    if (theta0_dist.size() != model.num_modes) {
        throw DimensionError("monte_carlo: initial mode distribution has the wrong size");
    }
    const NoiseSampler noise(model.noise_cov);

    SimulationReport report;
    report.runs = opts.runs;
    report.horizon = opts.horizon;
    report.master_seed = opts.master_seed;
    report.per_run_costs.assign(opts.runs, 0.0);
    const std::size_t kept = std::min(opts.keep_trajectories, opts.runs);
    report.trajectories.resize(kept);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            std::mt19937_64 rng = run_stream(opts.master_seed, r);
            const std::size_t theta0 = sample_mode(theta0_dist, rng);
            RunRecord rec = simulate(model, controller, noise, x0, theta0, opts.horizon, rng, r < kept);
            report.per_run_costs[r] = rec.time_averaged_cost;
            if (r < kept) {
                report.trajectories[r] = std::move(rec);
            }
        }
    };

    std::size_t threads = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, opts.runs);
    if (threads <= 1) {
        work(0, opts.runs);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (opts.runs + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(opts.runs, begin + chunk);
            if (begin < end) {
                pool.emplace_back(work, begin, end);
            }
        }
    }

    double sum = 0.0;
    for (double c : report.per_run_costs) {
        sum += c;
    }
    report.mean_cost = sum / static_cast<double>(opts.runs);
    if (opts.runs > 1) {
        double sq = 0.0;
        for (double c : report.per_run_costs) {
            sq += (c - report.mean_cost) * (c - report.mean_cost);
        }
        report.std_cost = std::sqrt(sq / static_cast<double>(opts.runs - 1));
    }
    return report;
}

} // namespace mjls
