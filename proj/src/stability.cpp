#include "mjls/stability.hpp"

#include <algorithm>
#include <string>

#include "mjls/errors.hpp"

namespace mjls {

namespace {

void require_square_family(std::span<const Matrix> mats, const TransitionMatrix& t) {
    if (mats.empty() || mats.size() != t.num_modes()) {
        throw DimensionError("stability: need one matrix per mode");
    }
    const Eigen::Index n = mats[0].rows();
    for (const auto& a : mats) {
        if (a.rows() != n || a.cols() != n) {
            throw DimensionError("stability: mode matrices must be square and equally sized");
        }
    }
}

std::vector<Matrix> default_probe(std::size_t modes, Eigen::Index n) {
    return std::vector<Matrix>(modes, Matrix::Identity(n, n));
}

} // namespace

StabilityReport ms_stable_spectral(std::span<const Matrix> mode_mats, const TransitionMatrix& t) {
    require_square_family(mode_mats, t);
    StabilityReport report;
    report.method = StabilityMethod::SpectralRadius;
    report.spectral_radius_m = build_augmented_matrix(mode_mats, t).spectral_radius();
    report.is_ms_stable = *report.spectral_radius_m < 1.0;
    return report;
}

StabilityReport ms_stable_lyapunov(std::span<const Matrix> mode_mats, const TransitionMatrix& t,
                                   std::span<const Matrix> q_probe) {
    require_square_family(mode_mats, t);
    const std::size_t modes = mode_mats.size();
    const Eigen::Index n = mode_mats[0].rows();
    const Eigen::Index blk = n * n;

    std::vector<Matrix> probe_storage;
    if (q_probe.empty()) {
        probe_storage = default_probe(modes, n);
        q_probe = probe_storage;
    }
    if (q_probe.size() != modes) {
        throw DimensionError("ms_stable_lyapunov: need one probe matrix per mode");
    }

    // Row block i: sum_j p_ij (A_i^T ⊗ A_i^T) vec(P_j) - vec(P_i) = -vec(Q_i)
    const Eigen::Index dim = static_cast<Eigen::Index>(modes) * blk;
    Matrix sys = -Matrix::Identity(dim, dim);
    Vector rhs(dim);
    for (std::size_t i = 0; i < modes; ++i) {
        if (q_probe[i].rows() != n || q_probe[i].cols() != n) {
            throw DimensionError("ms_stable_lyapunov: probe matrices must match the state dimension");
        }
        const Matrix at = mode_mats[i].transpose();
        const Matrix kk = kron(at, at);
        const auto row = static_cast<Eigen::Index>(i) * blk;
        for (std::size_t j = 0; j < modes; ++j) {
            sys.block(row, static_cast<Eigen::Index>(j) * blk, blk, blk) += t(i, j) * kk;
        }
        rhs.segment(row, blk) = -vec(q_probe[i]);
    }

    StabilityReport report;
    report.method = StabilityMethod::Lyapunov;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (!lu.isInvertible()) {
        report.lyapunov_feasible = false;
        report.is_ms_stable = false;
        return report;
    }
    const Vector p = lu.solve(rhs);
    bool all_pd = true;
    for (std::size_t i = 0; i < modes; ++i) {
        Matrix pi = symmetrize(devec(p.segment(static_cast<Eigen::Index>(i) * blk, blk), n, n));
        all_pd = all_pd && min_symmetric_eigenvalue(pi) >= kPdFloor;
        report.lyapunov_solution.push_back(std::move(pi));
    }
    report.lyapunov_feasible = all_pd;
    report.is_ms_stable = all_pd;
    return report;
}

StabilityReport ms_stable_both(std::span<const Matrix> mode_mats, const TransitionMatrix& t) {
    StabilityReport report = ms_stable_lyapunov(mode_mats, t);
    const StabilityReport spectral = ms_stable_spectral(mode_mats, t);
    report.spectral_radius_m = spectral.spectral_radius_m;
    report.is_ms_stable = spectral.is_ms_stable;
    report.method = StabilityMethod::Both;
    return report;
}

StabilityReport certify_closed_loop(const MjlsModel& model, const Matrix& gain) {
    const std::vector<Matrix> closed = closed_loop_matrices(model, gain);
    return ms_stable_spectral(closed, model.transition);
}

double lyapunov_residual(std::span<const Matrix> mode_mats, const TransitionMatrix& t, std::span<const Matrix> p,
                         std::span<const Matrix> q_probe) {
    double worst = 0.0;
    for (std::size_t i = 0; i < mode_mats.size(); ++i) {
        Matrix lhs = q_probe[i] - p[i];
        for (std::size_t j = 0; j < mode_mats.size(); ++j) {
            lhs += t(i, j) * mode_mats[i].transpose() * p[j] * mode_mats[i];
        }
        worst = std::max(worst, lhs.norm());
    }
    return worst;
}

} // namespace mjls
