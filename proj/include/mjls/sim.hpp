#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mjls/model.hpp"

namespace mjls {

/// Linear state feedback used in simulation. Mode-gain controllers read the
/// current mode; constant-gain and zero controllers never do.
class Controller {
public:
    enum class Kind { ConstantGain, ModeGain, Zero };

    static Controller constant_gain(Matrix gain);
    static Controller mode_gain(std::vector<Matrix> gains);
    static Controller zero(Eigen::Index input_dim, Eigen::Index state_dim);

    Kind kind() const noexcept { return kind_; }
    const std::vector<Matrix>& gains() const noexcept { return gains_; }

    Vector input(const Vector& x, std::size_t mode) const;

    /// Throws DimensionError when gains do not fit the model.
    void check(const MjlsModel& model) const;

private:
    Controller(Kind kind, std::vector<Matrix> gains) : kind_(kind), gains_(std::move(gains)) {}

    Kind kind_;
    std::vector<Matrix> gains_;
};

/// Zero-mean Gaussian draws with covariance W through its symmetric square root.
class NoiseSampler {
public:
    explicit NoiseSampler(const Matrix& cov);

    Vector operator()(std::mt19937_64& rng) const;
    const Matrix& factor() const noexcept { return factor_; }

private:
    Matrix factor_;
};

/// Draws the next mode from row `mode` of the transition matrix.
std::size_t sample_mode(const TransitionMatrix& t, std::size_t mode, std::mt19937_64& rng);
std::size_t sample_mode(const ModeDistribution& dist, std::mt19937_64& rng);

/// Independent generator for one Monte Carlo run.
std::mt19937_64 run_stream(std::uint64_t master_seed, std::size_t run);

struct RunRecord {
    /// x_0..x_K, u_0..u_K and theta_0..theta_K (0-based modes); empty unless recorded.
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<std::size_t> modes;
    std::vector<double> stage_costs;
    /// (1/K) sum_{k=0}^{K} (x_k^T Q x_k + u_k^T R u_k)
    double time_averaged_cost = 0.0;
};

/// Simulates x_{k+1} = A x + B u + H w for k = 0..K with theta0 0-based.
RunRecord sample_run(const MjlsModel& model, const Controller& controller, const Vector& x0, std::size_t theta0,
                     std::size_t horizon, std::mt19937_64& rng, bool record = true);

struct MonteCarloOptions {
    std::size_t horizon = 100;
    std::size_t runs = 10000;
    std::uint64_t master_seed = 0;
    /// 0 picks std::thread::hardware_concurrency().
    std::size_t threads = 0;
    /// Number of leading runs whose trajectories are kept in the report.
    std::size_t keep_trajectories = 0;
};

struct SimulationReport {
    std::size_t runs = 0;
    std::size_t horizon = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> per_run_costs;
    double mean_cost = 0.0;
    /// Sample standard deviation (zero for a single run).
    double std_cost = 0.0;
    std::vector<RunRecord> trajectories;
};

/// Runs are independent and use run_stream(master_seed, index), so the report
/// does not depend on the thread count.
SimulationReport monte_carlo(const MjlsModel& model, const Controller& controller, const Vector& x0,
                             const ModeDistribution& theta0_dist, const MonteCarloOptions& opts = {});

} // namespace mjls
