#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mjls/model.hpp"
#include "mjls/model_io.hpp"

namespace mjls::testing {

inline std::string data_path(const std::string& name) {
    return std::string(MJLS_DATA_DIR) + "/" + name;
}

/// Numerical example shipped in data/paper.model; transition and noise are 1-based.
inline MjlsModel example_model(std::size_t transition = 1, std::size_t noise = 1) {
    return load_model(data_path("paper.model"), ModelSelection{transition, noise});
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = normal(rng);
        }
    }
    return m;
}

inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index n, double shift = 0.0) {
    const Matrix g = random_matrix(rng, n, n);
    return g * g.transpose() + shift * Matrix::Identity(n, n);
}

/// Row-stochastic matrix with strictly positive entries (hence regular).
inline Matrix random_stochastic(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix t(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            t(i, j) = u(rng);
        }
        t.row(i) /= t.row(i).sum();
    }
    return t;
}

/// Generic random MJLS with PD weights and full-rank noise.
inline MjlsModel random_model(std::mt19937_64& rng, std::size_t modes, Eigen::Index n, Eigen::Index m,
                              double a_scale = 0.5) {
    MjlsModel model;
    model.num_modes = modes;
    model.state_dim = n;
    model.input_dim = m;
    model.noise_dim = n;
    for (std::size_t i = 0; i < modes; ++i) {
        model.a.push_back(random_matrix(rng, n, n, a_scale));
        model.b.push_back(random_matrix(rng, n, m));
        model.h.push_back(Matrix::Identity(n, n) + 0.3 * random_matrix(rng, n, n));
        model.q.push_back(random_psd(rng, n, 0.5));
        model.r.push_back(random_psd(rng, m, 0.5));
    }
    model.transition = TransitionMatrix(random_stochastic(rng, static_cast<Eigen::Index>(modes)));
    model.noise_cov = random_psd(rng, n, 0.1);
    return symmetrized(model);
}

inline MjlsModel scalar_model(double a, double b, double q, double r, double h = 1.0, double w = 1.0) {
    MjlsModel model;
    model.num_modes = 1;
    model.state_dim = model.input_dim = model.noise_dim = 1;
    model.a = {Matrix::Constant(1, 1, a)};
    model.b = {Matrix::Constant(1, 1, b)};
    model.h = {Matrix::Constant(1, 1, h)};
    model.q = {Matrix::Constant(1, 1, q)};
    model.r = {Matrix::Constant(1, 1, r)};
    model.transition = TransitionMatrix(Matrix::Ones(1, 1));
    model.noise_cov = Matrix::Constant(1, 1, w);
    return model;
}

/// Classical discrete-time LQR by plain Riccati value iteration.
struct LqrOracle {
    Matrix gain;
    Matrix p;
};

inline LqrOracle lqr_oracle(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    Matrix p = q;
    for (int k = 0; k < 200000; ++k) {
        const Matrix s = r + b.transpose() * p * b;
        const Matrix next = q + a.transpose() * p * a -
                            a.transpose() * p * b * s.ldlt().solve(b.transpose() * p * a);
        const double change = (next - p).norm();
        p = 0.5 * (next + next.transpose());
        if (change <= 1e-14 * std::max(1.0, p.norm())) {
            break;
        }
    }
    const Matrix gain = -(r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    return {gain, p};
}

/// Expected time-averaged cost over k = 0..K by exact propagation of the
/// time-varying second moments (mode distribution advanced every step).
inline double expected_average_cost(const MjlsModel& model, const std::vector<Matrix>& gains, const Vector& x0,
                                    const Vector& theta0, std::size_t horizon) {
    const std::size_t modes = model.num_modes;
    const Eigen::Index n = model.state_dim;
    std::vector<Matrix> x(modes);
    for (std::size_t i = 0; i < modes; ++i) {
        x[i] = theta0(static_cast<Eigen::Index>(i)) * x0 * x0.transpose();
    }
    Vector dist = theta0;
    double total = 0.0;
    for (std::size_t k = 0; k <= horizon; ++k) {
        for (std::size_t i = 0; i < modes; ++i) {
            const Matrix& g = gains.size() == 1 ? gains[0] : gains[i];
            total += ((model.q[i] + g.transpose() * model.r[i] * g) * x[i]).trace();
        }
        std::vector<Matrix> next(modes, Matrix::Zero(n, n));
        for (std::size_t i = 0; i < modes; ++i) {
            const Matrix& g = gains.size() == 1 ? gains[0] : gains[i];
            const Matrix ac = model.a[i] + model.b[i] * g;
            const Matrix c = ac * x[i] * ac.transpose() +
                             dist(static_cast<Eigen::Index>(i)) * model.h[i] * model.noise_cov * model.h[i].transpose();
            for (std::size_t j = 0; j < modes; ++j) {
                next[j] += model.transition(i, j) * c;
            }
        }
        x = std::move(next);
        dist = model.transition.entries().transpose() * dist;
    }
    return total / static_cast<double>(horizon);
}

} // namespace mjls::testing
