#include "mjls/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mjls/errors.hpp"

namespace mjls {

namespace {

void require_moment_shapes(const MjlsModel& model, const std::vector<Matrix>& x, const ModeDistribution& dist) {
    if (x.size() != model.num_modes || dist.size() != model.num_modes) {
        throw DimensionError("second moments: expected " + std::to_string(model.num_modes) + " modes");
    }
    for (const auto& xi : x) {
        if (xi.rows() != model.state_dim || xi.cols() != model.state_dim) {
            throw DimensionError("second moments: each X must be " + std::to_string(model.state_dim) + " square");
        }
    }
}

Matrix noise_cov_state(const MjlsModel& model, std::size_t i) {
    return model.h[i] * model.noise_cov * model.h[i].transpose();
}

double max_change(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, (a[i] - b[i]).norm());
    }
    return d;
}

} // namespace

VectorizedMomentState vectorize(const std::vector<Matrix>& x) {
    if (x.empty()) {
        return {};
    }
    const Eigen::Index blk = x.front().size();
    Vector zeta(static_cast<Eigen::Index>(x.size()) * blk);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != blk) {
            throw DimensionError("vectorize: moment blocks differ in size");
        }
        zeta.segment(static_cast<Eigen::Index>(i) * blk, blk) = vec(x[i]);
    }
    return {std::move(zeta)};
}

std::vector<Matrix> devectorize(const VectorizedMomentState& z, std::size_t num_modes, Eigen::Index state_dim) {
    const Eigen::Index blk = state_dim * state_dim;
    if (z.zeta.size() != static_cast<Eigen::Index>(num_modes) * blk) {
        throw DimensionError("devectorize: length does not match modes and state dimension");
    }
    std::vector<Matrix> out;
    out.reserve(num_modes);
    for (std::size_t i = 0; i < num_modes; ++i) {
        out.push_back(devec(z.zeta.segment(static_cast<Eigen::Index>(i) * blk, blk), state_dim, state_dim));
    }
    return out;
}

SecondMomentState zero_moments(const MjlsModel& model, const ModeDistribution& dist) {
    return {std::vector<Matrix>(model.num_modes, Matrix::Zero(model.state_dim, model.state_dim)), dist};
}

SecondMomentState second_moment_step(const MjlsModel& model, const Matrix& gain, const SecondMomentState& state) {
    require_moment_shapes(model, state.x, state.mode_dist);
    const std::vector<Matrix> closed = closed_loop_matrices(model, gain);
    const Eigen::Index n = model.state_dim;

    std::vector<Matrix> contrib;
    contrib.reserve(model.num_modes);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        contrib.push_back(closed[i] * state.x[i] * closed[i].transpose() + state.mode_dist[i] * noise_cov_state(model, i));
    }
    std::vector<Matrix> next(model.num_modes, Matrix::Zero(n, n));
    for (std::size_t j = 0; j < model.num_modes; ++j) {
        for (std::size_t i = 0; i < model.num_modes; ++i) {
            const double p = model.transition(i, j);
            if (p != 0.0) {
                next[j] += p * contrib[i];
            }
        }
        next[j] = symmetrize(next[j]);
    }
    return {std::move(next), propagate_mode_distribution(model.transition, state.mode_dist)};
}

Vector noise_injection(const MjlsModel& model, const ModeDistribution& dist) {
    if (dist.size() != model.num_modes) {
        throw DimensionError("noise_injection: distribution size differs from mode count");
    }
    const Eigen::Index blk = model.state_dim * model.state_dim;
    const Vector vec_w = vec(model.noise_cov);
    Vector injected(static_cast<Eigen::Index>(model.num_modes) * blk);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        injected.segment(static_cast<Eigen::Index>(i) * blk, blk) = dist[i] * (kron(model.h[i], model.h[i]) * vec_w);
    }
    // (T^T ⊗ I) applied blockwise.
    Vector out = Vector::Zero(injected.size());
    for (std::size_t j = 0; j < model.num_modes; ++j) {
        for (std::size_t i = 0; i < model.num_modes; ++i) {
            out.segment(static_cast<Eigen::Index>(j) * blk, blk) +=
                model.transition(i, j) * injected.segment(static_cast<Eigen::Index>(i) * blk, blk);
        }
    }
    return out;
}

VectorizedMomentState affine_step(const MjlsModel& model, const Matrix& gain, const VectorizedMomentState& z,
                                  const ModeDistribution& dist) {
    const AugmentedMatrix m = build_augmented_matrix(closed_loop_matrices(model, gain), model.transition);
    if (z.zeta.size() != m.entries().cols()) {
        throw DimensionError("affine_step: state length does not match the augmented matrix");
    }
    return {m.entries() * z.zeta + noise_injection(model, dist)};
}

StationaryMoments stationary_second_moment(const MjlsModel& model, const Matrix& gain,
                                           const StationaryMomentOptions& opts) {
    const double rho = build_augmented_matrix(closed_loop_matrices(model, gain), model.transition).spectral_radius();
    if (!(rho < 1.0)) {
        throw NotStableError("closed loop is not mean-square stable (rho(M) = " + std::to_string(rho) + ")", rho);
    }
    const ModeDistribution pi = stationary_distribution(model.transition);

    StationaryMoments result{zero_moments(model, pi), 0, {}, rho};
    if (opts.initial) {
        require_moment_shapes(model, *opts.initial, pi);
        result.state.x = *opts.initial;
    }
    for (std::size_t k = 0; k < opts.max_iters; ++k) {
        SecondMomentState next = second_moment_step(model, gain, result.state);
        // Hold the mode distribution at its limit.
        next.mode_dist = pi;
        const double change = max_change(next.x, result.state.x);
        result.residuals.push_back(change);
        result.state = std::move(next);
        result.iterations = k + 1;
        // The distance to the fixed point is about change / (1 - rho).
        double scale = 0.0;
        for (const Matrix& x : result.state.x) {
            scale = std::max(scale, x.norm());
        }
        const double threshold =
            std::max(opts.tol * (1.0 - rho), 16.0 * std::numeric_limits<double>::epsilon() * scale);
        if (change <= std::min(opts.tol, threshold)) {
            return result;
        }
        if (!std::isfinite(change)) {
            break;
        }
    }
    throw NoConvergenceError("stationary second moment did not converge in " + std::to_string(opts.max_iters) +
                             " iterations");
}

SecondMomentState stationary_second_moment_direct(const MjlsModel& model, const Matrix& gain) {
    const AugmentedMatrix m = build_augmented_matrix(closed_loop_matrices(model, gain), model.transition);
    const double rho = m.spectral_radius();
    if (!(rho < 1.0)) {
        throw NotStableError("closed loop is not mean-square stable (rho(M) = " + std::to_string(rho) + ")", rho);
    }
    const ModeDistribution pi = stationary_distribution(model.transition);
    const Eigen::Index dim = m.entries().rows();
    const Matrix sys = Matrix::Identity(dim, dim) - m.entries();
    const Vector zeta = sys.partialPivLu().solve(noise_injection(model, pi));
    std::vector<Matrix> x = devectorize({zeta}, model.num_modes, model.state_dim);
    for (auto& xi : x) {
        xi = symmetrize(xi);
    }
    return {std::move(x), pi};
}

double infinite_horizon_cost(const MjlsModel& model, const Matrix& gain, const std::vector<Matrix>& x_inf) {
    require_gain_shape(model, gain);
    if (x_inf.size() != model.num_modes) {
        throw DimensionError("infinite_horizon_cost: expected one moment per mode");
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        const Matrix weight = model.q[i] + gain.transpose() * model.r[i] * gain;
        cost += (weight * x_inf[i]).trace();
    }
    return cost;
}

} // namespace mjls
