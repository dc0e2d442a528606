#include <doctest.h>

#include <filesystem>
#include <random>

#include "mjls/errors.hpp"
#include "mjls/model.hpp"
#include "mjls/model_io.hpp"
#include "support.hpp"

using namespace mjls;
using mjls::testing::example_model;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

TEST_CASE("validate_model") {
    SUBCASE("example model passes") {
        const ValidationReport report = validate_model(example_model(1));
        CHECK(report.ok());
        CHECK(report.diagnostics().empty());
    }
    SUBCASE("row sum 0.99") {
        MjlsModel m = example_model(1);
        m.transition = TransitionMatrix(mat2(0.89, 0.1, 0.1, 0.9));
        const ValidationReport report = validate_model(m);
        CHECK_FALSE(report.ok());
        const ValidationCheck* f = report.failure("row-stochastic");
        REQUIRE(f != nullptr);
        CHECK(f->mode == 1u);
    }
    SUBCASE("R_1 = 0") {
        MjlsModel m = example_model(1);
        m.r[0] = Matrix::Zero(1, 1);
        const ValidationReport report = validate_model(m);
        const ValidationCheck* f = report.failure("R positive definite");
        REQUIRE(f != nullptr);
        CHECK(f->mode == 1u);
        CHECK(f->matrix == "R");
    }
    SUBCASE("indefinite Q and W") {
        MjlsModel m = example_model(1);
        m.q[1] = mat2(1, 0, 0, -1);
        m.noise_cov = mat2(1, 2, 2, 1);
        const ValidationReport report = validate_model(m);
        CHECK(report.failure("Q positive semidefinite") != nullptr);
        CHECK(report.failure("W positive semidefinite") != nullptr);
    }
    SUBCASE("asymmetry beyond tolerance") {
        MjlsModel m = example_model(1);
        m.q[0](0, 1) = 1e-6;
        CHECK(validate_model(m).failure("Q symmetric") != nullptr);
        m.q[0](0, 1) = 1e-12;
        CHECK(validate_model(m).ok());
    }
    SUBCASE("shapes") {
        MjlsModel m = example_model(1);
        m.b[1] = Matrix::Zero(2, 2);
        CHECK(validate_model(m).failure("dimensions") != nullptr);
        m = example_model(1);
        m.a.pop_back();
        CHECK(validate_model(m).failure("dimensions") != nullptr);
        m = example_model(1);
        m.transition = TransitionMatrix(Matrix::Identity(3, 3));
        CHECK(validate_model(m).failure("dimensions") != nullptr);
    }
    SUBCASE("non-regular chain") {
        MjlsModel m = example_model(1);
        m.transition = TransitionMatrix(Matrix::Identity(2, 2));
        CHECK(validate_model(m).failure("regular") != nullptr);
    }
}

TEST_CASE("check_regularity") {
    CHECK(check_regularity(TransitionMatrix(mat2(0.9, 0.1, 0.1, 0.9))));
    CHECK_FALSE(check_regularity(TransitionMatrix(Matrix::Identity(2, 2))));
    CHECK_FALSE(check_regularity(TransitionMatrix(mat2(0, 1, 1, 0))));
    // Zero entries, but T^2 is positive.
    CHECK(check_regularity(TransitionMatrix(mat2(0, 1, 0.5, 0.5))));
    CHECK(check_regularity(TransitionMatrix(Matrix::Ones(1, 1))));
}

TEST_CASE("stationary_distribution") {
    const ModeDistribution pi1 = stationary_distribution(TransitionMatrix(mat2(0.9, 0.1, 0.1, 0.9)));
    CHECK(std::abs(pi1[0] - 0.5) <= 1e-12);
    CHECK(std::abs(pi1[1] - 0.5) <= 1e-12);

    // 0.3 pi_1 = 0.6 pi_2 and pi_1 + pi_2 = 1.
    const ModeDistribution pi2 = stationary_distribution(TransitionMatrix(mat2(0.7, 0.3, 0.6, 0.4)));
    CHECK(std::abs(pi2[0] - 2.0 / 3.0) <= 1e-12);
    CHECK(std::abs(pi2[1] - 1.0 / 3.0) <= 1e-12);

    CHECK(stationary_distribution(TransitionMatrix(Matrix::Ones(1, 1)))[0] == 1.0);
    CHECK_THROWS_AS(stationary_distribution(TransitionMatrix(Matrix::Identity(2, 2))), NotRegularError);
}

TEST_CASE("propagate_mode_distribution") {
    const TransitionMatrix t2(mat2(0.7, 0.3, 0.6, 0.4));
    const ModeDistribution d = propagate_mode_distribution(t2, ModeDistribution::point_mass(2, 0));
    CHECK(d[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(0.3).epsilon(1e-15));

    const ModeDistribution u = propagate_mode_distribution(TransitionMatrix(mat2(0.9, 0.1, 0.1, 0.9)), ModeDistribution::uniform(2));
    CHECK(u[0] == doctest::Approx(0.5));

    const ModeDistribution r = propagate_mode_distribution(TransitionMatrix(mat2(0.1, 0.9, 0.3, 0.7)), ModeDistribution::point_mass(2, 1));
    CHECK(r[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(r[1] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("mode chain properties on random regular chains") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 1 + trial % 5;
        const TransitionMatrix t(mjls::testing::random_stochastic(rng, n));
        const ModeDistribution pi = stationary_distribution(t);
        const ModeDistribution once = propagate_mode_distribution(t, pi);
        CHECK((once.probs() - pi.probs()).cwiseAbs().maxCoeff() <= 1e-12);

        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vector start(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            start(i) = u(rng);
        }
        ModeDistribution d(start / start.sum());
        for (int k = 0; k < 1000; ++k) {
            d = propagate_mode_distribution(t, d);
        }
        CHECK((d.probs() - pi.probs()).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("model file") {
    SUBCASE("blocks and selection") {
        const std::string text = read_text_file(mjls::testing::data_path("paper.model"));
        const ModelBlockCounts counts = count_model_blocks(text);
        CHECK(counts.transitions == 3);
        CHECK(counts.noises == 2);
        const MjlsModel m = parse_model(text, {2, 2});
        CHECK(m.transition(1, 0) == 0.6);
        CHECK(m.noise_cov(0, 0) == 0.25);
        CHECK(m.a[0](0, 1) == 1.2);
        CHECK(m.b[1](1, 0) == 0.2);
        CHECK_THROWS_AS(parse_model(text, {4, 1}), ValidationError);
        CHECK_THROWS_AS(parse_model(text, {1, 3}), ValidationError);
    }

    SUBCASE("unknown keys are rejected") {
        std::string text = dump_model(example_model(1));
        std::string with_extra = text;
        with_extra.insert(with_extra.find('{') + 1, "\"C\": [[[1]]],");
        CHECK_THROWS_WITH_AS(parse_model(with_extra), doctest::Contains("unknown key 'C'"), ValidationError);
        std::string bad_dims = text;
        bad_dims.replace(bad_dims.find("\"noise\""), 7, "\"other\"");
        CHECK_THROWS_AS(parse_model(bad_dims), ValidationError);
    }

    SUBCASE("malformed input") {
        CHECK_THROWS_AS(parse_model("{"), ValidationError);
        CHECK_THROWS_AS(parse_model("[]"), ValidationError);
        CHECK_THROWS_AS(parse_model(R"({"modes": 1})"), ValidationError);
    }

    SUBCASE("invalid model fails load with diagnostics") {
        MjlsModel m = example_model(1);
        m.r[1] = Matrix::Zero(1, 1);
        const auto path = std::filesystem::temp_directory_path() / "mjls_test_bad.model";
        save_model(m, path);
        CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("R positive definite"), ValidationError);
        std::filesystem::remove(path);
    }

    SUBCASE("round trip is bit exact") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            const MjlsModel m = mjls::testing::random_model(rng, 1 + trial % 3, 1 + trial % 4, 1 + trial % 2);
            const MjlsModel back = parse_model(dump_model(m));
            CHECK(back.num_modes == m.num_modes);
            CHECK(back.state_dim == m.state_dim);
            for (std::size_t i = 0; i < m.num_modes; ++i) {
                CHECK(back.a[i] == m.a[i]);
                CHECK(back.b[i] == m.b[i]);
                CHECK(back.h[i] == m.h[i]);
                CHECK(back.q[i] == m.q[i]);
                CHECK(back.r[i] == m.r[i]);
            }
            CHECK(back.transition.entries() == m.transition.entries());
            CHECK(back.noise_cov == m.noise_cov);
            CHECK(dump_model(back) == dump_model(m));
        }
    }

    SUBCASE("gain files") {
        Matrix l(1, 2);
        l << -0.6669668309878576, -1.7642727673770107;
        CHECK(parse_gain(dump_gain(l)) == l);
        CHECK_THROWS_AS(parse_gain(R"({"K": [[1]]})"), ValidationError);
    }
}
