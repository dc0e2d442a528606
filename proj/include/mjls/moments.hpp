#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mjls/model.hpp"

namespace mjls {

/// X^(i)_k = E[x_k x_k^T 1{theta_k = i}] for every mode, plus the mode distribution.
struct SecondMomentState {
    std::vector<Matrix> x;
    ModeDistribution mode_dist;
};

/// zeta_k = [vec(X^(1))^T ... vec(X^(N))^T]^T
struct VectorizedMomentState {
    Vector zeta;
};

VectorizedMomentState vectorize(const std::vector<Matrix>& x);
std::vector<Matrix> devectorize(const VectorizedMomentState& z, std::size_t num_modes, Eigen::Index state_dim);

/// Zero moments in every mode with the given mode distribution.
SecondMomentState zero_moments(const MjlsModel& model, const ModeDistribution& dist);

/**
 * One step of the second-moment recursion under u = L x:
 *   X^(j)' = sum_i p_ij [ (A_i + B_i L) X^(i) (A_i + B_i L)^T + dist_i H_i W H_i^T ].
 * The mode distribution advances one step along the chain.
 */
SecondMomentState second_moment_step(const MjlsModel& model, const Matrix& gain, const SecondMomentState& state);

/// Noise injection N_k = (T^T ⊗ I) blockdiag(dist_i (H_i ⊗ H_i)) [vec(W); ...; vec(W)].
Vector noise_injection(const MjlsModel& model, const ModeDistribution& dist);

/// zeta' = M zeta + N_k, the vectorized form of second_moment_step.
VectorizedMomentState affine_step(const MjlsModel& model, const Matrix& gain, const VectorizedMomentState& z,
                                  const ModeDistribution& dist);

struct StationaryMomentOptions {
    double tol = 1e-10;
    std::size_t max_iters = 100000;
    /// Starting moments; zero when unset.
    std::optional<std::vector<Matrix>> initial;
};

struct StationaryMoments {
    SecondMomentState state;
    std::size_t iterations = 0;
    /// max_i ||X^(i)_{k+1} - X^(i)_k||_F per iteration.
    std::vector<double> residuals;
    double spectral_radius = 0.0;
};

/// Fixed point of second_moment_step with the stationary mode distribution held
/// fixed. Stops once the step change is below tol * (1 - rho(M)), so the result
/// lies within about tol of the fixed point. Throws NotStableError if rho(M) >= 1
/// and NoConvergenceError after max_iters.
StationaryMoments stationary_second_moment(const MjlsModel& model, const Matrix& gain,
                                           const StationaryMomentOptions& opts = {});

/// Same fixed point from the linear solve (I - M) zeta = N_inf.
SecondMomentState stationary_second_moment_direct(const MjlsModel& model, const Matrix& gain);

/// sum_i tr((Q_i + L^T R_i L) X^(i))
double infinite_horizon_cost(const MjlsModel& model, const Matrix& gain, const std::vector<Matrix>& x_inf);

} // namespace mjls
