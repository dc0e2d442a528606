#include "mjls/model.hpp"

#include <cmath>
#include <sstream>

#include "mjls/errors.hpp"

namespace mjls {

TransitionMatrix::TransitionMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
        throw DimensionError("transition matrix must be square and non-empty");
    }
}

ModeDistribution::ModeDistribution(Vector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) {
        throw DimensionError("mode distribution must be non-empty");
    }
    if ((probs_.array() < 0.0).any() || std::abs(probs_.sum() - 1.0) > kStochasticTolerance) {
        throw ValidationError("mode distribution must be nonnegative and sum to one");
    }
}

ModeDistribution ModeDistribution::point_mass(std::size_t num_modes, std::size_t mode) {
    if (mode >= num_modes) {
        throw DimensionError("mode index out of range");
    }
    Vector p = Vector::Zero(static_cast<Eigen::Index>(num_modes));
    p(static_cast<Eigen::Index>(mode)) = 1.0;
    return ModeDistribution(std::move(p));
}

ModeDistribution ModeDistribution::uniform(std::size_t num_modes) {
    return ModeDistribution(Vector::Constant(static_cast<Eigen::Index>(num_modes), 1.0 / static_cast<double>(num_modes)));
}

bool ValidationReport::ok() const {
    for (const auto& c : checks) {
        if (!c.passed) {
            return false;
        }
    }
    return true;
}

const ValidationCheck* ValidationReport::failure(const std::string& name) const {
    for (const auto& c : checks) {
        if (!c.passed && c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

std::string ValidationReport::diagnostics() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        if (c.passed) {
            continue;
        }
        os << c.name;
        if (!c.matrix.empty()) {
            os << ": " << c.matrix;
            if (c.mode) {
                os << '_' << *c.mode;
            }
        }
        if (!c.detail.empty()) {
            os << " (" << c.detail << ')';
        }
        os << '\n';
    }
    return os.str();
}

namespace {

class Checker {
public:
    explicit Checker(ValidationReport& report) : report_(report) {}

    void add(std::string name, bool passed, std::string matrix = {}, std::optional<std::size_t> mode = {},
             std::string detail = {}) {
        report_.checks.push_back({std::move(name), passed, mode, std::move(matrix), std::move(detail)});
    }

private:
    ValidationReport& report_;
};

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

// Returns false when the shape check already failed, so the value checks can be skipped.
bool check_family(Checker& c, const std::vector<Matrix>& mats, const char* name, std::size_t num_modes,
                  Eigen::Index rows, Eigen::Index cols) {
    bool ok = true;
    if (mats.size() != num_modes) {
        c.add("dimensions", false, name, {},
              "expected " + std::to_string(num_modes) + " matrices, got " + std::to_string(mats.size()));
        return false;
    }
    for (std::size_t i = 0; i < mats.size(); ++i) {
        const bool shape = mats[i].rows() == rows && mats[i].cols() == cols;
        if (!shape) {
            c.add("dimensions", false, name, i + 1,
                  "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                      std::to_string(mats[i].rows()) + "x" + std::to_string(mats[i].cols()));
            ok = false;
        } else if (!all_finite(mats[i])) {
            c.add("finite", false, name, i + 1, "non-finite entry");
            ok = false;
        }
    }
    return ok;
}

void check_symmetric_psd(Checker& c, const Matrix& m, const char* name, std::optional<std::size_t> mode, bool strict) {
    const double asym = asymmetry(m);
    c.add(std::string(name) + " symmetric", asym <= kSymmetryTolerance, name, mode,
          asym <= kSymmetryTolerance ? "" : "max |M - M^T| = " + std::to_string(asym));
    const double lmin = min_symmetric_eigenvalue(m);
    if (strict) {
        c.add(std::string(name) + " positive definite", lmin >= kPdFloor, name, mode,
              lmin >= kPdFloor ? "" : "min eigenvalue " + std::to_string(lmin));
    } else {
        c.add(std::string(name) + " positive semidefinite", lmin >= kPsdFloor, name, mode,
              lmin >= kPsdFloor ? "" : "min eigenvalue " + std::to_string(lmin));
    }
}

} // namespace

ValidationReport validate_model(const MjlsModel& model) {
    ValidationReport report;
    Checker c(report);

    const bool dims_positive =
        model.num_modes > 0 && model.state_dim > 0 && model.input_dim > 0 && model.noise_dim > 0;
    c.add("positive dimensions", dims_positive, {}, {}, dims_positive ? "" : "modes and dims must be positive");
    if (!dims_positive) {
        return report;
    }

    const std::size_t nm = model.num_modes;
    const Eigen::Index n = model.state_dim, m = model.input_dim, w = model.noise_dim;
    check_family(c, model.a, "A", nm, n, n);
    check_family(c, model.b, "B", nm, n, m);
    check_family(c, model.h, "H", nm, n, w);
    const bool q_ok = check_family(c, model.q, "Q", nm, n, n);
    const bool r_ok = check_family(c, model.r, "R", nm, m, m);

    if (q_ok) {
        for (std::size_t i = 0; i < nm; ++i) {
            check_symmetric_psd(c, model.q[i], "Q", i + 1, false);
        }
    }
    if (r_ok) {
        for (std::size_t i = 0; i < nm; ++i) {
            check_symmetric_psd(c, model.r[i], "R", i + 1, true);
        }
    }

    const bool w_shape = model.noise_cov.rows() == w && model.noise_cov.cols() == w;
    c.add("dimensions", w_shape, "W", {}, w_shape ? "" : "W must be " + std::to_string(w) + " square");
    if (w_shape) {
        const bool finite = all_finite(model.noise_cov);
        c.add("finite", finite, "W", {}, finite ? "" : "non-finite entry");
        if (finite) {
            check_symmetric_psd(c, model.noise_cov, "W", {}, false);
        }
    }

    const Matrix& t = model.transition.entries();
    const bool t_shape = model.transition.num_modes() == nm;
    c.add("dimensions", t_shape, "T", {},
          t_shape ? "" : "T must be " + std::to_string(nm) + " square");
    if (t_shape) {
        const bool range = t.allFinite() && (t.array() >= 0.0).all() && (t.array() <= 1.0).all();
        c.add("probability range", range, "T", {}, range ? "" : "entries must lie in [0, 1]");
        bool stochastic = true;
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            const double s = t.row(i).sum();
            if (!(std::abs(s - 1.0) <= kStochasticTolerance)) {
                c.add("row-stochastic", false, "T", static_cast<std::size_t>(i) + 1, "row sums to " + std::to_string(s));
                stochastic = false;
            }
        }
        if (stochastic) {
            c.add("row-stochastic", true, "T");
        }
        if (range) {
            const bool regular = check_regularity(model.transition);
            c.add("regular", regular, "T", {}, regular ? "" : "no power T^k, k <= N^2, is entrywise positive");
        }
    }
    return report;
}

MjlsModel symmetrized(const MjlsModel& model) {
    MjlsModel out = model;
    for (auto& q : out.q) {
        q = symmetrize(q);
    }
    for (auto& r : out.r) {
        r = symmetrize(r);
    }
    out.noise_cov = symmetrize(out.noise_cov);
    return out;
}

bool check_regularity(const TransitionMatrix& t) {
    // Works on the positivity pattern only, so long products cannot underflow.
    using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
    const Pattern base = (t.entries().array() > 0.0).cast<int>().matrix();
    Pattern power = base;
    const std::size_t n = t.num_modes();
    for (std::size_t k = 1; k <= n * n; ++k) {
        if ((power.array() > 0).all()) {
            return true;
        }
        power = ((power * base).array() > 0).cast<int>().matrix();
    }
    return false;
}

ModeDistribution stationary_distribution(const TransitionMatrix& t) {
    if (!check_regularity(t)) {
        throw NotRegularError("stationary_distribution: chain is not regular");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(t.num_modes());
    Matrix sys(n + 1, n);
    sys.topRows(n) = t.entries().transpose() - Matrix::Identity(n, n);
    sys.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    Vector pi = sys.colPivHouseholderQr().solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return ModeDistribution(std::move(pi));
}

ModeDistribution propagate_mode_distribution(const TransitionMatrix& t, const ModeDistribution& dist) {
    if (dist.size() != t.num_modes()) {
        throw DimensionError("propagate_mode_distribution: distribution and chain sizes differ");
    }
    Vector next = t.entries().transpose() * dist.probs();
    const double s = next.sum();
    if (s > 0.0) {
        next /= s;
    }
    return ModeDistribution(std::move(next));
}

void require_gain_shape(const MjlsModel& model, const Matrix& gain) {
    if (gain.rows() != model.input_dim || gain.cols() != model.state_dim) {
        throw DimensionError("gain must be " + std::to_string(model.input_dim) + "x" + std::to_string(model.state_dim) +
                             ", got " + std::to_string(gain.rows()) + "x" + std::to_string(gain.cols()));
    }
}

std::vector<Matrix> closed_loop_matrices(const MjlsModel& model, const Matrix& gain) {
    require_gain_shape(model, gain);
    std::vector<Matrix> out;
    out.reserve(model.num_modes);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        out.push_back(model.a[i] + model.b[i] * gain);
    }
    return out;
}

std::vector<Matrix> closed_loop_matrices(const MjlsModel& model, std::span<const Matrix> gains) {
    if (gains.size() != model.num_modes) {
        throw DimensionError("expected one gain per mode");
    }
    std::vector<Matrix> out;
    out.reserve(model.num_modes);
    for (std::size_t i = 0; i < model.num_modes; ++i) {
        require_gain_shape(model, gains[i]);
        out.push_back(model.a[i] + model.b[i] * gains[i]);
    }
    return out;
}

} // namespace mjls
