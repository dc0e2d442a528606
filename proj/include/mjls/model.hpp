#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mjls/matops.hpp"

namespace mjls {

/// Row-stochastic matrix of mode transition probabilities, p_ij = entries(i, j).
/// Only squareness is enforced on construction; the remaining invariants are
/// checked by validate_model so that broken inputs can be reported.
class TransitionMatrix {
public:
    explicit TransitionMatrix(Matrix entries);

    std::size_t num_modes() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    double operator()(std::size_t from, std::size_t to) const {
        return entries_(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
    }
    const Matrix& entries() const noexcept { return entries_; }

private:
    Matrix entries_;
};

/// Probability of each mode. Entry i is P(theta = i), 0-based.
class ModeDistribution {
public:
    explicit ModeDistribution(Vector probs);

    static ModeDistribution point_mass(std::size_t num_modes, std::size_t mode);
    static ModeDistribution uniform(std::size_t num_modes);

    std::size_t size() const noexcept { return static_cast<std::size_t>(probs_.size()); }
    double operator[](std::size_t i) const { return probs_(static_cast<Eigen::Index>(i)); }
    const Vector& probs() const noexcept { return probs_; }

private:
    Vector probs_;
};

/// Complete problem instance: per-mode (A, B, H, Q, R), transition matrix, noise covariance.
struct MjlsModel {
    std::size_t num_modes = 0;
    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    Eigen::Index noise_dim = 0;
    std::vector<Matrix> a;
    std::vector<Matrix> b;
    std::vector<Matrix> h;
    std::vector<Matrix> q;
    std::vector<Matrix> r;
    TransitionMatrix transition{Matrix::Identity(1, 1)};
    Matrix noise_cov;
};

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kPsdFloor = -1e-10;
inline constexpr double kPdFloor = 1e-12;
inline constexpr double kStochasticTolerance = 1e-12;

struct ValidationCheck {
    std::string name;
    bool passed = true;
    std::optional<std::size_t> mode; ///< 1-based, when the check is per mode
    std::string matrix;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool ok() const;
    /// First failed check carrying this name, if any.
    const ValidationCheck* failure(const std::string& name) const;
    /// One line per failed check.
    std::string diagnostics() const;
};

/// Checks every model and transition-matrix invariant. Never throws.
ValidationReport validate_model(const MjlsModel& model);

/// Copy with Q, R and W replaced by their symmetric parts.
MjlsModel symmetrized(const MjlsModel& model);

/// true iff some power T^k with k <= N^2 is entrywise positive.
bool check_regularity(const TransitionMatrix& t);

/// Unique pi with pi^T T = pi^T and sum(pi) = 1. Throws NotRegularError.
ModeDistribution stationary_distribution(const TransitionMatrix& t);

/// One step of the mode chain: out_j = sum_i p_ij dist_i.
ModeDistribution propagate_mode_distribution(const TransitionMatrix& t, const ModeDistribution& dist);

/// A_i + B_i L for every mode.
std::vector<Matrix> closed_loop_matrices(const MjlsModel& model, const Matrix& gain);

/// A_i + B_i L_i for mode-dependent gains.
std::vector<Matrix> closed_loop_matrices(const MjlsModel& model, std::span<const Matrix> gains);

/// Throws DimensionError unless gain is input_dim x state_dim.
void require_gain_shape(const MjlsModel& model, const Matrix& gain);

} // namespace mjls
