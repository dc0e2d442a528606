#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mjls/model.hpp"

namespace mjls {

/// mu_eps(M) = eps * sum_i exp(|lambda_i| / eps). Overflows to +inf for small eps;
/// use smoothed_spectral_radius when only the ordering matters.
double smooth_spectral_surrogate(const AugmentedMatrix& m, double epsilon);

/// eps * log(mu_eps(M) / eps), evaluated with log-sum-exp. Lies in
/// [rho(M), rho(M) + eps * log(dim)] and is a monotone transform of mu_eps.
double smoothed_spectral_radius(const AugmentedMatrix& m, double epsilon);

/// rho(M(L)) for the closed loop A_i + B_i L.
double closed_loop_spectral_radius(const MjlsModel& model, const Matrix& gain);

struct StabilizabilityOptions {
    std::vector<double> epsilon_schedule{1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
    std::uint64_t seed = 0;
    /// Start 0 is L = 0, the rest are seeded standard-normal gains.
    std::size_t starts = 4;
    double inner_tol = 1e-9;
    std::size_t max_inner_iters = 200;
    std::size_t max_polish_evals = 20000;
};

struct HomotopyStep {
    double epsilon = 0.0;
    /// smoothed_spectral_radius at the minimizer for this epsilon.
    double smoothed = 0.0;
    /// True rho(M) at that minimizer.
    double rho = 0.0;
    std::size_t iterations = 0;
    Matrix gain;
};

struct StartTrace {
    std::size_t start = 0;
    Matrix initial_gain;
    std::vector<HomotopyStep> steps;
    Matrix polished_gain;
    double polished_rho = 0.0;
};

struct StabilizabilityResult {
    Matrix best_gain;
    double best_rho = 0.0;
    bool is_stabilizable = false;
    std::vector<double> epsilon_schedule;
    std::size_t best_start = 0;
    std::vector<StartTrace> trace;
};

/**
 * Minimizes rho(M(L)) over constant gains. For each start, walks the epsilon
 * schedule (decreasing) minimizing the smoothed radius with a finite-difference
 * BFGS warm-started from the previous minimizer, then polishes rho itself with
 * a compass search. Returns the best over starts (ties to the lower index).
 */
StabilizabilityResult minimize_spectral_radius(const MjlsModel& model, const StabilizabilityOptions& opts = {});

struct GridSample {
    double l1 = 0.0;
    double l2 = 0.0;
    double rho = 0.0;
};

/// rho(M(L)) on a points x points grid over the first two entries of vec(L);
/// remaining entries are taken from base_gain. With a single gain entry only l1 varies.
std::vector<GridSample> spectral_radius_grid(const MjlsModel& model, const Matrix& base_gain, double lo1, double hi1,
                                             double lo2, double hi2, std::size_t points);

} // namespace mjls
