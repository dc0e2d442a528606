#include "mjls/stabilizability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "mjls/errors.hpp"

namespace mjls {

namespace {

void require_epsilon(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ValidationError("epsilon must be positive and finite");
    }
}

Eigen::VectorXd moduli(const AugmentedMatrix& m) {
    return eigenvalues(m.entries()).cwiseAbs();
}

using Objective = std::function<double(const Vector&)>;

Vector fd_gradient(const Objective& f, const Vector& x) {
    const double h = 1e-6 * (1.0 + x.norm());
    Vector g(x.size());
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + h;
        const double up = f(probe);
        probe(i) = x(i) - h;
        const double down = f(probe);
        probe(i) = x(i);
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

struct LocalMin {
    Vector x;
    double value = 0.0;
    std::size_t iterations = 0;
};

// Quasi-Newton with inverse-Hessian BFGS updates and Armijo backtracking.
LocalMin bfgs(const Objective& f, Vector x, double tol, std::size_t max_iters) {
    const Eigen::Index dim = x.size();
    double fx = f(x);
    Vector g = fd_gradient(f, x);
    Matrix hinv = Matrix::Identity(dim, dim);
    std::size_t it = 0;
    for (; it < max_iters; ++it) {
        if (g.norm() <= tol) {
            break;
        }
        Vector d = -hinv * g;
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            d = -g;
            slope = -g.squaredNorm();
        }
        double t = 1.0;
        double ft = f(x + t * d);
        while (!(ft <= fx + 1e-4 * t * slope) && t > 1e-14) {
            t *= 0.5;
            ft = f(x + t * d);
        }
        if (t <= 1e-14) {
            break;
        }
        const Vector s = t * d;
        const Vector x_new = x + s;
        const Vector g_new = fd_gradient(f, x_new);
        const Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-14) {
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(dim, dim);
            hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const double decrease = fx - ft;
        x = x_new;
        g = g_new;
        fx = ft;
        if (decrease <= tol * (1.0 + std::abs(fx)) && s.norm() <= std::sqrt(tol) * (1.0 + x.norm())) {
            ++it;
            break;
        }
    }
    return {std::move(x), fx, it};
}

// Derivative-free polish on the nonsmooth objective.
LocalMin compass_search(const Objective& f, Vector x, std::size_t max_evals) {
    double fx = f(x);
    double step = 1e-2 * (1.0 + x.norm());
    std::size_t evals = 1;
    while (step > 1e-13 && evals < max_evals) {
        bool improved = false;
        for (Eigen::Index i = 0; i < x.size() && evals < max_evals; ++i) {
            for (double sign : {1.0, -1.0}) {
                Vector probe = x;
                probe(i) += sign * step;
                const double fp = f(probe);
                ++evals;
                if (fp < fx) {
                    x = std::move(probe);
                    fx = fp;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) {
            step *= 0.5;
        }
    }
    return {std::move(x), fx, evals};
}

} // namespace

double smooth_spectral_surrogate(const AugmentedMatrix& m, double epsilon) {
    require_epsilon(epsilon);
    const Eigen::VectorXd mod = moduli(m);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < mod.size(); ++i) {
        sum += std::exp(mod(i) / epsilon);
    }
    return epsilon * sum;
}

double smoothed_spectral_radius(const AugmentedMatrix& m, double epsilon) {
    require_epsilon(epsilon);
    const Eigen::VectorXd mod = moduli(m);
    const double top = mod.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < mod.size(); ++i) {
        sum += std::exp((mod(i) - top) / epsilon);
    }
    return top + epsilon * std::log(sum);
}

double closed_loop_spectral_radius(const MjlsModel& model, const Matrix& gain) {
    return build_augmented_matrix(closed_loop_matrices(model, gain), model.transition).spectral_radius();
}

StabilizabilityResult minimize_spectral_radius(const MjlsModel& model, const StabilizabilityOptions& opts) {
    if (opts.epsilon_schedule.empty() || opts.starts == 0) {
        throw ValidationError("minimize_spectral_radius: need a non-empty schedule and at least one start");
    }
    for (std::size_t i = 0; i < opts.epsilon_schedule.size(); ++i) {
        require_epsilon(opts.epsilon_schedule[i]);
        if (i > 0 && !(opts.epsilon_schedule[i] < opts.epsilon_schedule[i - 1])) {
            throw ValidationError("minimize_spectral_radius: epsilon schedule must be strictly decreasing");
        }
    }
    const Eigen::Index m = model.input_dim, n = model.state_dim;
    auto as_gain = [&](const Vector& v) { return devec(v, m, n); };
    const Objective true_rho = [&](const Vector& v) { return closed_loop_spectral_radius(model, as_gain(v)); };

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    StabilizabilityResult result;
    result.epsilon_schedule = opts.epsilon_schedule;
    result.best_rho = std::numeric_limits<double>::infinity();

    for (std::size_t s = 0; s < opts.starts; ++s) {
        StartTrace trace;
        trace.start = s;
        Vector x = Vector::Zero(m * n);
        if (s > 0) {
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                x(i) = normal(rng);
            }
        }
        trace.initial_gain = as_gain(x);
        for (double eps : opts.epsilon_schedule) {
            const Objective smooth = [&](const Vector& v) {
                return smoothed_spectral_radius(
                    build_augmented_matrix(closed_loop_matrices(model, as_gain(v)), model.transition), eps);
            };
            LocalMin lm = bfgs(smooth, x, opts.inner_tol, opts.max_inner_iters);
            x = lm.x;
            trace.steps.push_back({eps, lm.value, true_rho(x), lm.iterations, as_gain(x)});
        }
        // Polish from the best point seen along the homotopy.
        Vector start = x;
        double start_rho = true_rho(x);
        for (const auto& step : trace.steps) {
            if (step.rho < start_rho) {
                start_rho = step.rho;
                start = vec(step.gain);
            }
        }
        const LocalMin polished = compass_search(true_rho, start, opts.max_polish_evals);
        trace.polished_gain = as_gain(polished.x);
        trace.polished_rho = closed_loop_spectral_radius(model, trace.polished_gain);
        if (trace.polished_rho < result.best_rho) {
            result.best_rho = trace.polished_rho;
            result.best_gain = trace.polished_gain;
            result.best_start = s;
        }
        result.trace.push_back(std::move(trace));
    }
    result.best_rho = closed_loop_spectral_radius(model, result.best_gain);
    result.is_stabilizable = result.best_rho < 1.0;
    return result;
}

std::vector<GridSample> spectral_radius_grid(const MjlsModel& model, const Matrix& base_gain, double lo1, double hi1,
                                             double lo2, double hi2, std::size_t points) {
    require_gain_shape(model, base_gain);
    if (points < 2) {
        throw ValidationError("spectral_radius_grid: need at least two points per axis");
    }
    const Eigen::Index m = model.input_dim, n = model.state_dim;
    const bool two_axes = m * n >= 2;
    std::vector<GridSample> out;
    const std::size_t second = two_axes ? points : 1;
    out.reserve(points * second);
    Vector v = vec(base_gain);
    for (std::size_t i = 0; i < points; ++i) {
        const double l1 = lo1 + (hi1 - lo1) * static_cast<double>(i) / static_cast<double>(points - 1);
        for (std::size_t j = 0; j < second; ++j) {
            const double l2 = two_axes ? lo2 + (hi2 - lo2) * static_cast<double>(j) / static_cast<double>(points - 1) : 0.0;
            v(0) = l1;
            if (two_axes) {
                v(1) = l2;
            }
            out.push_back({l1, l2, closed_loop_spectral_radius(model, devec(v, m, n))});
        }
    }
    return out;
}

} // namespace mjls
