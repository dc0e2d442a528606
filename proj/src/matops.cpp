#include "mjls/matops.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mjls/errors.hpp"
#include "mjls/model.hpp"

namespace mjls {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Vector vec(const Matrix& a) {
    // Eigen storage is column-major, so reshaping stacks columns.
    return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix devec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (rows < 0 || cols < 0 || v.size() != rows * cols) {
        throw DimensionError("devec: vector of length " + std::to_string(v.size()) + " cannot form a " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix pinv(const Matrix& a) {
    if (a.size() == 0) {
        return Matrix::Zero(a.cols(), a.rows());
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = 1e-12 * (sigma.size() > 0 ? sigma(0) : 0.0);
    Vector inv_sigma = Vector::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) {
            inv_sigma(i) = 1.0 / sigma(i);
        }
    }
    return svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXcd eigenvalues(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw DimensionError("eigenvalues: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    if (a.size() == 0) {
        return {};
    }
    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error("eigenvalues: QR iteration did not converge");
    }
    return solver.eigenvalues();
}

double spectral_radius(const Matrix& a) {
    const Eigen::VectorXcd lambda = eigenvalues(a);
    double rho = 0.0;
    for (const auto& l : lambda) {
        rho = std::max(rho, std::abs(l));
    }
    return rho;
}

Matrix symmetrize(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

double min_symmetric_eigenvalue(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    if (m.size() == 0) {
        return 0.0;
    }
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

AugmentedMatrix::AugmentedMatrix(std::size_t num_modes, Eigen::Index state_dim, Matrix entries)
    : num_modes_(num_modes), state_dim_(state_dim), entries_(std::move(entries)) {
    const Eigen::Index dim = static_cast<Eigen::Index>(num_modes_) * state_dim_ * state_dim_;
    if (entries_.rows() != dim || entries_.cols() != dim) {
        throw DimensionError("augmented matrix must be " + std::to_string(dim) + " square");
    }
}

double AugmentedMatrix::spectral_radius() const {
    return mjls::spectral_radius(entries_);
}

AugmentedMatrix build_augmented_matrix(std::span<const Matrix> mode_mats, const TransitionMatrix& t) {
    const std::size_t num_modes = mode_mats.size();
    if (num_modes == 0 || num_modes != t.num_modes()) {
        throw DimensionError("build_augmented_matrix: " + std::to_string(num_modes) + " mode matrices for a " +
                             std::to_string(t.num_modes()) + "-mode chain");
    }
    const Eigen::Index n = mode_mats[0].rows();
    for (const auto& a : mode_mats) {
        if (a.rows() != n || a.cols() != n) {
            throw DimensionError("build_augmented_matrix: mode matrices must all be " + std::to_string(n) + " square");
        }
    }
    const Eigen::Index blk = n * n;
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(num_modes) * blk, static_cast<Eigen::Index>(num_modes) * blk);
    for (std::size_t i = 0; i < num_modes; ++i) {
        const Matrix aa = kron(mode_mats[i], mode_mats[i]);
        for (std::size_t j = 0; j < num_modes; ++j) {
            const double p = t(i, j);
            if (p != 0.0) {
                m.block(static_cast<Eigen::Index>(j) * blk, static_cast<Eigen::Index>(i) * blk, blk, blk) = p * aa;
            }
        }
    }
    return AugmentedMatrix(num_modes, n, std::move(m));
}

} // namespace mjls
