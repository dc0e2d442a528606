#include <doctest.h>

#include <random>

#include "mjls/errors.hpp"
#include "mjls/matops.hpp"
#include "mjls/model.hpp"
#include "support.hpp"

using namespace mjls;
using mjls::testing::random_matrix;

namespace {

// Explicit (T^T ⊗ I) * blockdiag(A_i ⊗ A_i), built the slow way.
Matrix augmented_by_definition(const std::vector<Matrix>& mats, const Matrix& t) {
    const Eigen::Index blk = mats[0].rows() * mats[0].rows();
    const auto nm = static_cast<Eigen::Index>(mats.size());
    Matrix diag = Matrix::Zero(nm * blk, nm * blk);
    for (Eigen::Index i = 0; i < nm; ++i) {
        diag.block(i * blk, i * blk, blk, blk) = kron(mats[static_cast<std::size_t>(i)], mats[static_cast<std::size_t>(i)]);
    }
    return kron(t.transpose(), Matrix::Identity(blk, blk)) * diag;
}

} // namespace

TEST_CASE("kron by definition") {
    CHECK(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)).isApprox(Matrix::Identity(4, 4)));

    std::mt19937_64 rng(1);
    const Matrix b = random_matrix(rng, 2, 3);
    CHECK(kron(Matrix::Constant(1, 1, 2.0), b).isApprox(2.0 * b));

    Matrix a(2, 2), c(2, 2), expected(4, 4);
    a << 1, 1, 0, 1;
    c << 0, 1, 1, 0;
    expected << 0, 1, 0, 1,
                1, 0, 1, 0,
                0, 0, 0, 1,
                0, 0, 1, 0;
    CHECK(kron(a, c) == expected);
}

TEST_CASE("vec stacks columns and devec inverts it") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    Vector expected(4);
    expected << 1, 3, 2, 4;
    CHECK(vec(a) == expected);

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index rows = 1 + trial % 4, cols = 1 + (trial / 4) % 3;
        const Matrix m = random_matrix(rng, rows, cols);
        CHECK(devec(vec(m), rows, cols) == m);
    }
    CHECK_THROWS_AS(devec(Vector::Zero(5), 2, 3), DimensionError);
}

TEST_CASE("vec(A X B^T) equals (B kron A) vec(X)") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 2), b = random_matrix(rng, 2, 2);
        const Vector lhs = vec(a * x * b.transpose());
        const Vector rhs = kron(b, a) * vec(x);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("pinv") {
    CHECK(pinv(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 0.5;
    CHECK((pinv(d) - expected).norm() <= 1e-15);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 4, 4) + 3.0 * Matrix::Identity(4, 4);
        const Matrix direct = a.partialPivLu().solve(Matrix::Identity(4, 4));
        CHECK((pinv(a) - direct).cwiseAbs().maxCoeff() <= 1e-10);
    }

    SUBCASE("Penrose conditions on rank-deficient inputs") {
        for (int trial = 0; trial < 30; ++trial) {
            const Eigen::Index rank = 1 + trial % 3;
            const Matrix a = random_matrix(rng, 5, rank) * random_matrix(rng, rank, 4);
            const Matrix ap = pinv(a);
            CHECK((a * ap * a - a).norm() <= 1e-10);
            CHECK((ap * a * ap - ap).norm() <= 1e-10);
            CHECK(((a * ap).transpose() - a * ap).norm() <= 1e-10);
            CHECK(((ap * a).transpose() - ap * a).norm() <= 1e-10);
        }
    }
    CHECK(pinv(Matrix::Zero(2, 3)).isZero());
}

TEST_CASE("spectral radius") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 0.3;
    d(1, 1) = -0.7;
    CHECK(spectral_radius(d) == doctest::Approx(0.7).epsilon(1e-14));

    Matrix rot(2, 2);
    rot << 0, -1, 1, 0;
    CHECK(spectral_radius(rot) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(spectral_radius(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("augmented matrix") {
    SUBCASE("single mode reduces to A kron A") {
        const std::vector<Matrix> mats{Matrix::Constant(1, 1, 0.5)};
        const AugmentedMatrix m = build_augmented_matrix(mats, TransitionMatrix(Matrix::Ones(1, 1)));
        CHECK(m.entries()(0, 0) == 0.25);
        CHECK(m.spectral_radius() == 0.25);
    }

    SUBCASE("open-loop example radii") {
        const double expected[] = {1.3295, 1.2970, 1.1047};
        for (std::size_t t = 1; t <= 3; ++t) {
            const MjlsModel model = mjls::testing::example_model(t);
            const double rho = build_augmented_matrix(model.a, model.transition).spectral_radius();
            CHECK(std::abs(rho - expected[t - 1]) <= 5e-5);
        }
    }

    SUBCASE("block structure matches the Kronecker definition") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<Matrix> mats{random_matrix(rng, 3, 3), random_matrix(rng, 3, 3)};
            const Matrix t = mjls::testing::random_stochastic(rng, 2);
            const AugmentedMatrix m = build_augmented_matrix(mats, TransitionMatrix(t));
            CHECK((m.entries() - augmented_by_definition(mats, t)).norm() <= 1e-13);
        }
    }

    SUBCASE("single mode radius is rho(A)^2") {
        std::mt19937_64 rng(6);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix a = random_matrix(rng, 3, 3);
            const std::vector<Matrix> mats{a};
            const double rho = build_augmented_matrix(mats, TransitionMatrix(Matrix::Ones(1, 1))).spectral_radius();
            const double ra = spectral_radius(a);
            CHECK(std::abs(rho - ra * ra) <= 1e-10 * std::max(1.0, ra * ra));
        }
    }

    SUBCASE("largest eigenvalue of M^T M bounds rho(M)^2 from above") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const std::vector<Matrix> mats{random_matrix(rng, 2, 2), random_matrix(rng, 2, 2)};
            const AugmentedMatrix m = build_augmented_matrix(mats, TransitionMatrix(mjls::testing::random_stochastic(rng, 2)));
            const double rho = m.spectral_radius();
            const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(m.entries().transpose() * m.entries()).eigenvalues().maxCoeff();
            CHECK(lmax >= rho * rho * (1.0 - 1e-12));
        }
    }

    SUBCASE("dimension mismatch") {
        const std::vector<Matrix> mats{Matrix::Identity(2, 2), Matrix::Identity(3, 3)};
        CHECK_THROWS_AS(build_augmented_matrix(mats, TransitionMatrix(Matrix::Identity(2, 2))), DimensionError);
        const std::vector<Matrix> one{Matrix::Identity(2, 2)};
        CHECK_THROWS_AS(build_augmented_matrix(one, TransitionMatrix(Matrix::Identity(2, 2))), DimensionError);
    }
}
