#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mjls/model.hpp"

namespace mjls {

struct SynthesisOptions {
    /// Stop once every X and Lambda iterate moves by at most tol (Frobenius).
    double tol = 1e-10;
    std::size_t max_iters = 10000;
    std::uint64_t seed = 0;
    std::size_t num_restarts = 8;
    /// Warm start for restart 0: the moments and multipliers of this gain
    /// replace the random initialization.
    std::optional<Matrix> initial_gain;
};

/// Frobenius norms of the three optimality conditions.
struct OptimalityResiduals {
    /// (A_i+B_iL)^T P_i (A_i+B_iL) + Q_i + L^T R_i L - Lambda_i, max over i.
    double multiplier = 0.0;
    /// Stationarity defect of X^(i) under the moment recursion, max over i.
    double moment = 0.0;
    /// sum_i (R_i + B_i^T P_i B_i) L X^(i) + B_i^T P_i A_i X^(i).
    double gain = 0.0;

    double max() const;
};

struct RestartSummary {
    std::size_t index = 0;
    bool converged = false;
    bool certified_stable = false;
    std::size_t iterations = 0;
    /// rho(M) of the closed loop at the final gain; infinity if the iteration blew up.
    double spectral_radius = 0.0;
    /// Infinite-horizon cost; only meaningful when certified_stable.
    double cost = 0.0;
};

struct SynthesisResult {
    Matrix gain;
    std::vector<Matrix> lambdas;
    std::vector<Matrix> p_mats;
    std::vector<Matrix> x_infs;
    OptimalityResiduals residuals;
    std::size_t iterations = 0;
    bool converged = false;
    bool certified_stable = false;
    double spectral_radius = 0.0;
    double cost = 0.0;
    /// Smallest eigenvalue over all Lambda_i.
    double min_lambda_eigenvalue = 0.0;
    /// Restart the result came from.
    std::size_t restart = 0;
    /// max_i ||X^(i)_{k+1} - X^(i)_k||_F for each iteration of the selected restart.
    std::vector<double> trace;
    std::vector<RestartSummary> restarts;
};

/// P_i = sum_j p_ij Lambda_j
std::vector<Matrix> averaged_multipliers(const TransitionMatrix& t, const std::vector<Matrix>& lambdas);

OptimalityResiduals optimality_residuals(const MjlsModel& model, const Matrix& gain, const std::vector<Matrix>& lambdas,
                                         const std::vector<Matrix>& x_infs);

/// vec(L) = -[sum_i X^(i) ⊗ (R_i + B_i^T P_i B_i)]^+ vec(sum_i B_i^T P_i A_i X^(i))
Matrix solve_gain_step(const MjlsModel& model, const std::vector<Matrix>& lambdas, const std::vector<Matrix>& x_infs);

/**
 * Constant mode-independent gain from the coupled optimality conditions.
 *
 * Each restart draws random positive definite X and Lambda, then alternates the
 * pseudoinverse gain solve with a Jacobi sweep of the moment and multiplier
 * recursions (stationary mode distribution) until both sequences settle. Every
 * final gain is certified with the spectral test. The certified, converged
 * restart with the lowest cost wins (ties to the lower index).
 *
 * Throws NoStabilizingGainFound when no restart yields a certified loop.
 */
SynthesisResult synthesize(const MjlsModel& model, const SynthesisOptions& opts = {});

struct BaselineOptions {
    /// Relative change of the Riccati iterates, max over modes.
    double tol = 1e-12;
    std::size_t max_iters = 100000;
};

/// Mode-observed optimal controller u = L_theta x (coupled Riccati fixed point).
struct BaselineGains {
    std::vector<Matrix> mode_gains;
    std::vector<Matrix> riccati_mats;
    std::size_t iterations = 0;
    double spectral_radius = 0.0;
};

/// Iterates E_i = sum_j p_ij P_j, L_i = -(R_i + B_i^T E_i B_i)^{-1} B_i^T E_i A_i,
/// P_i = Q_i + A_i^T E_i A_i - A_i^T E_i B_i (R_i + B_i^T E_i B_i)^{-1} B_i^T E_i A_i
/// from P = 0. Throws NoConvergenceError or NotStabilizableError.
BaselineGains chizeck_baseline(const MjlsModel& model, const BaselineOptions& opts = {});

} // namespace mjls
