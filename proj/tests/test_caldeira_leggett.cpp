#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "entarrow/caldeira_leggett.hpp"
#include "entarrow/errors.hpp"

using namespace entarrow;
using namespace entarrow::cl;

namespace {

const PositionGrid kGrid(128, 0.1);

CLParameters params(double gamma, double temperature) {
    CLParameters p;
    p.gamma = gamma;
    p.temperature = temperature;
    return p;
}

double safe_dt(const CLParameters& p, Terms t) { return 0.9 * max_stable_dt(kGrid, p, t); }

CLState random_hermitian(std::uint64_t seed) {
    const Mat u = haar_unitary(kGrid.size(), seed);
    Eigen::VectorXd w(static_cast<Eigen::Index>(kGrid.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::cos(0.37 * static_cast<double>(i) + 1.0);
    Mat m = u * w.cast<cplx>().asDiagonal() * u.adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    m /= m.diagonal().real().sum() * kGrid.dx();
    return CLState(m, kGrid);
}

}  // namespace

TEST_CASE("grid geometry") {
    CHECK(kGrid.x(0) == doctest::Approx(-6.35));
    CHECK(kGrid.x(127) == doctest::Approx(6.35));
    CHECK(kGrid.extent() == doctest::Approx(12.7));
    CHECK_THROWS_AS(PositionGrid(8, 0.1), UsageError);
    CHECK_THROWS_AS(PositionGrid(64, 0.0), UsageError);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(params(-0.1, 1.0).validate(), UsageError);
    CHECK_THROWS_AS(params(0.1, 0.0).validate(), UsageError);
    CLParameters p;
    p.mass = 0.0;
    CHECK_THROWS_AS(p.validate(), UsageError);
    CHECK(params(0.5, 2.0).decoherence_rate() == doctest::Approx(2.0));
}

TEST_CASE("initial states are normalized, positive and contained") {
    const auto g = gaussian_state(kGrid, 0.0, 0.5, 1.0);
    CHECK(g.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.purity() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(positivity_min_eig(g) >= -1e-10);
    CHECK(std::abs(g.rho()(0, 0)) < 1e-8);
    CHECK(g.mean_momentum() == doctest::Approx(1.0).epsilon(1e-2));

    const auto c = cat_state(kGrid, -1.0, 1.0, 0.3);
    CHECK(c.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.mean_position() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(positivity_min_eig(c) >= -1e-10);
}

TEST_CASE("decoherence term leaves the diagonal alone") {
    const auto rho = cat_state(kGrid, -1.0, 1.0, 0.3);
    const Mat d = cl_rhs(rho, params(0.3, 2.0), kDecoherence);
    CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("with gamma = 0 every term reduces to the unitary one") {
    const auto rho = gaussian_state(kGrid, 0.5, 0.4, 0.7);
    const auto p = params(0.0, 3.0);
    CHECK((cl_rhs(rho, p, kAllTerms) - cl_rhs(rho, p, kUnitary)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rhs respects Hermiticity") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto rho = random_hermitian(seed);
        const Mat d = cl_rhs(rho, params(0.4, 1.5), kAllTerms);
        const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
        CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * scale);
    }
}

TEST_CASE("rhs is additive across terms") {
    const auto rho = random_hermitian(9);
    const auto p = params(0.2, 0.7);
    const Mat all = cl_rhs(rho, p, kAllTerms);
    const Mat sum = (cl_rhs(rho, p, kUnitary) + cl_rhs(rho, p, kDissipation)) + cl_rhs(rho, p, kDecoherence);
    CHECK((all - sum).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("integrate rejects steps above the stability bound") {
    const auto rho = gaussian_state(kGrid, 0.0, 0.5);
    const auto p = params(0.1, 1.0);
    CHECK_THROWS_AS(integrate(rho, p, 0.1, 2.0 * max_stable_dt(kGrid, p, kAllTerms), kAllTerms), UsageError);
    CHECK_THROWS_AS(integrate(rho, p, -1.0, 1e-4, kAllTerms), UsageError);
    CHECK(max_stable_dt(kGrid, params(0.0, 1.0), kAllTerms) > 0.0);
}

TEST_CASE("unitary evolution keeps purity") {
    const auto p = params(0.0, 1.0);
    const auto traj = integrate(gaussian_state(kGrid, 0.5, 0.7, 0.5), p, 1.0, safe_dt(p, kUnitary), kUnitary, 20);
    for (const auto& s : traj) CHECK(std::abs(s.state.purity() - 1.0) < 1e-6);
    CHECK(traj.back().t == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("dephasing alone matches the closed form") {
    const auto p = params(0.5, 2.0);
    const double lambda = p.decoherence_rate();
    const auto rho0 = cat_state(kGrid, -1.0, 1.0, 0.3);
    const auto traj = integrate(rho0, p, 0.5, safe_dt(p, kDecoherence), kDecoherence, 25);
    const auto n = static_cast<Eigen::Index>(kGrid.size());
    for (const auto& s : traj) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) {
                const double u = kGrid.x(static_cast<std::size_t>(i)) - kGrid.x(static_cast<std::size_t>(j));
                const cplx want = rho0.rho()(i, j) * std::exp(-lambda * u * u * s.t);
                if (std::abs(want) > 1e-6) worst = std::max(worst, std::abs(s.state.rho()(i, j) - want) / std::abs(want));
            }
        CHECK(worst < 1e-4);
        CHECK((s.state.rho().diagonal() - rho0.rho().diagonal()).cwiseAbs().maxCoeff() < 1e-10);
    }

    const auto c = coherence_series(traj, 2.0);
    const auto c0 = coherence_series(traj, 0.0);
    CHECK(c.front() == 1.0);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        CHECK(std::abs(c[k] - std::exp(-lambda * 4.0 * traj[k].t)) < 1e-3);
        CHECK(std::abs(c0[k] - 1.0) < 1e-12);
    }
}

TEST_CASE("friction slows a boosted packet") {
    CLParameters p = params(0.5, 0.5);
    p.omega = 0.05;
    const auto rho0 = gaussian_state(kGrid, -2.0, 0.5, 2.0);
    const Terms terms = kUnitary | kDissipation;
    const auto traj = integrate(rho0, p, 2.0, safe_dt(p, terms), terms, 20);
    double previous = std::abs(traj.front().state.mean_momentum());
    CHECK(previous == doctest::Approx(2.0).epsilon(1e-2));
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double now = std::abs(traj[k].state.mean_momentum());
        CHECK(now < previous);
        previous = now;
    }
    CHECK(previous < 2.0 * std::exp(-2.0 * 0.5 * 2.0) * 1.2);
}

TEST_CASE("timescale ratio in the dephasing-dominated regime") {
    // Lambda s^2 = 100 gamma; fit over one decoherence time.
    const auto p = params(1.0, 12.5);
    const auto traj = integrate(cat_state(kGrid, -1.0, 1.0, 0.3), p, 0.01, safe_dt(p, kAllTerms), kAllTerms, 5);
    const auto ts = timescales(traj, p, 2.0);
    CHECK(predicted_timescale_ratio(p, 2.0) == doctest::Approx(100.0));
    CHECK(std::abs(ts.ratio / 100.0 - 1.0) < 0.05);
    CHECK_FALSE(ts.dissipation_faster);
    CHECK(ts.tau_r == doctest::Approx(1.0));
}

TEST_CASE("timescale ratio below one is flagged") {
    const auto p = params(1.0, 0.1);
    const auto traj = integrate(cat_state(kGrid, -0.5, 0.5, 0.2), p, 2.0, safe_dt(p, kDecoherence), kDecoherence, 20);
    const auto ts = timescales(traj, p, 1.0);
    CHECK(predicted_timescale_ratio(p, 1.0) == doctest::Approx(0.2));
    CHECK(ts.ratio == doctest::Approx(0.2).epsilon(0.01));
    CHECK(ts.dissipation_faster);
}

TEST_CASE("timescales needs relaxation") {
    const auto p = params(0.0, 1.0);
    const auto traj = integrate(cat_state(kGrid, -1.0, 1.0, 0.3), p, 0.2, safe_dt(p, kAllTerms), kAllTerms, 10);
    CHECK_THROWS_AS(timescales(traj, p, 2.0), FitError);
}

TEST_CASE("positivity: dephasing stays positive, the cold weakly damped fixture does not") {
    const auto pd = params(1.0, 12.5);
    const auto deph = integrate(cat_state(kGrid, -1.0, 1.0, 0.3), pd, 0.05, safe_dt(pd, kDecoherence), kDecoherence, 20);
    for (const auto& s : deph) CHECK(positivity_min_eig(s.state) >= -1e-8);

    // First violating point of the sweep T in {1, 0.5, 0.2, 0.1} x gamma in {0.05, ..., 0.5}
    // from the harmonic ground state.
    const auto pv = params(0.05, 0.5);
    const auto traj = integrate(gaussian_state(kGrid, 0.0, std::sqrt(0.5)), pv, 1.0, safe_dt(pv, kAllTerms), kAllTerms, 50);
    double lowest = 0.0;
    for (const auto& s : traj) lowest = std::min(lowest, positivity_min_eig(s.state));
    CHECK(lowest < -1e-6);
    CHECK(lowest == doctest::Approx(-7.09956e-06).epsilon(1e-3));
}

// ----------------------------------------------------------------- properties

TEST_CASE("property: trace and Hermiticity hold for every term combination") {
    const auto p = params(0.3, 1.0);
    const auto rho0 = cat_state(kGrid, -1.0, 1.0, 0.4, 0.5);
    for (Terms t = 1; t <= kAllTerms; ++t) {
        const auto traj = integrate(rho0, p, 0.2, safe_dt(p, t), t, 25);
        for (const auto& s : traj) {
            CHECK(std::abs(s.state.trace() - 1.0) < 1e-6);
            CHECK((s.state.rho() - s.state.rho().adjoint()).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("property: vanishing friction recovers unitary dynamics") {
    const auto p = params(0.0, 5.0);
    const auto rho0 = cat_state(kGrid, -1.0, 1.0, 0.4);
    const double dt = safe_dt(p, kAllTerms);
    const auto full = integrate(rho0, p, 0.3, dt, kAllTerms, 30);
    const auto unit = integrate(rho0, p, 0.3, dt, kUnitary, 30);
    REQUIRE(full.size() == unit.size());
    for (std::size_t k = 0; k < full.size(); ++k)
        CHECK((full[k].state.rho() - unit[k].state.rho()).cwiseAbs().maxCoeff() < 1e-8);
}
