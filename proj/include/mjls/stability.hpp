#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mjls/model.hpp"

namespace mjls {

enum class StabilityMethod { SpectralRadius, Lyapunov, Both };

struct StabilityReport {
    /// rho(M); set whenever the spectral test ran.
    std::optional<double> spectral_radius_m;
    bool lyapunov_feasible = false;
    /// P_1..P_N from the coupled Lyapunov solve, when it ran and the system was nonsingular.
    std::vector<Matrix> lyapunov_solution;
    bool is_ms_stable = false;
    StabilityMethod method = StabilityMethod::SpectralRadius;
};

/// Mean-square stability via rho(M) < 1 (strict, no margin).
StabilityReport ms_stable_spectral(std::span<const Matrix> mode_mats, const TransitionMatrix& t);

/**
 * Mean-square stability via the coupled Lyapunov equations
 *   sum_j p_ij A_i^T P_j A_i - P_i = -Q_i,   i = 1..N,
 * solved as one dense linear system in the stacked vec(P_i). Feasible iff the
 * system is nonsingular and every P_i is positive definite. An empty q_probe
 * means Q_i = I for every mode.
 */
StabilityReport ms_stable_lyapunov(std::span<const Matrix> mode_mats, const TransitionMatrix& t,
                                   std::span<const Matrix> q_probe = {});

/// Runs both tests; is_ms_stable follows the spectral verdict.
StabilityReport ms_stable_both(std::span<const Matrix> mode_mats, const TransitionMatrix& t);

/// Spectral test on A_i + B_i L. Mandatory after any gain synthesis.
StabilityReport certify_closed_loop(const MjlsModel& model, const Matrix& gain);

/// max_i ||sum_j p_ij A_i^T P_j A_i - P_i + Q_i||_F
double lyapunov_residual(std::span<const Matrix> mode_mats, const TransitionMatrix& t, std::span<const Matrix> p,
                         std::span<const Matrix> q_probe);

} // namespace mjls
