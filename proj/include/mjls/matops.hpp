#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mjls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class TransitionMatrix;

/// Kronecker product a ⊗ b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization.
Vector vec(const Matrix& a);

/// Inverse of vec; throws DimensionError when v.size() != rows * cols.
Matrix devec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// 1e-12 * sigma_max are treated as zero.
Matrix pinv(const Matrix& a);

/// All (possibly complex) eigenvalues of a general square matrix.
Eigen::VectorXcd eigenvalues(const Matrix& a);

/// max |lambda_i|. Throws DimensionError on non-square input.
double spectral_radius(const Matrix& a);

/// (M + M^T) / 2
Matrix symmetrize(const Matrix& m);

/// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Matrix& m);

/// max |m_ij - m_ji|
double asymmetry(const Matrix& m);

/**
 * Block matrix M = (T^T ⊗ I) * blockdiag(A_1 ⊗ A_1, ..., A_N ⊗ A_N) acting on
 * the stacked column-vectorized second moments. Block (j, i) equals
 * p_ij (A_i ⊗ A_i), so M maps the moments of step k to those of step k+1
 * (noise-free part). Its spectral radius decides mean-square stability.
 */
class AugmentedMatrix {
public:
    AugmentedMatrix(std::size_t num_modes, Eigen::Index state_dim, Matrix entries);

    std::size_t num_modes() const noexcept { return num_modes_; }
    Eigen::Index state_dim() const noexcept { return state_dim_; }
    /// n^2, the length of one vectorized mode block.
    Eigen::Index block_size() const noexcept { return state_dim_ * state_dim_; }
    const Matrix& entries() const noexcept { return entries_; }

    double spectral_radius() const;

private:
    std::size_t num_modes_;
    Eigen::Index state_dim_;
    Matrix entries_;
};

/// Builds M from N square closed-loop mode matrices and the transition matrix.
AugmentedMatrix build_augmented_matrix(std::span<const Matrix> mode_mats, const TransitionMatrix& t);

} // namespace mjls
