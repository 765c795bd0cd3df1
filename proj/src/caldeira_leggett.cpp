#include "entarrow/caldeira_leggett.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "entarrow/errors.hpp"
#include "entarrow/stats.hpp"

namespace entarrow::cl {

namespace {

constexpr double kStabilityFactor = 0.2;
constexpr double kStateHermTol = 1e-9;
constexpr double kTraceDriftTol = 1e-6;
// samples below this normalized coherence are excluded from the fit
constexpr double kFitFloor = 1e-6;

Vec packet(const PositionGrid& grid, double center, double width, double momentum, double hbar) {
    Vec psi(static_cast<Eigen::Index>(grid.size()));
    const double norm = std::pow(2.0 * std::numbers::pi * width * width, -0.25);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.x(i);
        const double env = norm * std::exp(-(x - center) * (x - center) / (4.0 * width * width));
        psi(static_cast<Eigen::Index>(i)) = std::polar(env, momentum * x / hbar);
    }
    return psi;
}

CLState from_wavefunction(const PositionGrid& grid, Vec psi) {
    const double n2 = psi.squaredNorm() * grid.dx();
    if (!(n2 > 0.0)) throw UsageError("initial state vanishes on the grid");
    psi /= std::sqrt(n2);
    Mat rho = psi * psi.adjoint();
    return CLState(std::move(rho), grid);
}

}  // namespace

PositionGrid::PositionGrid(std::size_t n_points, double dx) : n_(n_points), dx_(dx) {
    if (n_ < 16) throw UsageError("PositionGrid: need at least 16 points");
    if (!(dx_ > 0.0)) throw UsageError("PositionGrid: spacing must be > 0");
}

Eigen::VectorXd PositionGrid::positions() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) x(static_cast<Eigen::Index>(i)) = this->x(i);
    return x;
}

void CLParameters::validate() const {
    constants.validate();
    if (!(mass > 0.0)) throw UsageError("CLParameters: mass must be > 0");
    if (!(temperature > 0.0)) throw UsageError("CLParameters: temperature must be > 0");
    if (!(omega > 0.0)) throw UsageError("CLParameters: omega must be > 0");
    if (!(gamma >= 0.0)) throw UsageError("CLParameters: gamma must be >= 0");
}

double CLParameters::decoherence_rate() const {
    return 2.0 * mass * gamma * constants.k_B * temperature / (constants.hbar * constants.hbar);
}

CLState::CLState(Mat rho, PositionGrid grid) : rho_(std::move(rho)), grid_(grid) {
    const auto n = static_cast<Eigen::Index>(grid_.size());
    if (rho_.rows() != n || rho_.cols() != n) throw UsageError("CLState: kernel shape does not match grid");
    const double scale = std::max(1.0, rho_.cwiseAbs().maxCoeff());
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kStateHermTol * scale)
        throw UsageError("CLState: kernel is not Hermitian");
    if (std::abs(trace() - 1.0) > kTraceDriftTol) throw UsageError("CLState: trace is not 1");
}

double CLState::trace() const { return rho_.diagonal().real().sum() * grid_.dx(); }

double CLState::purity() const { return rho_.squaredNorm() * grid_.dx() * grid_.dx(); }

double CLState::mean_position() const {
    double s = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        s += grid_.x(i) * rho_(k, k).real();
    }
    return s * grid_.dx();
}

double CLState::mean_momentum(double hbar) const {
    // <p> = -i hbar sum_x d/dx rho(x, y)|_{y=x} dx, central difference
    const auto n = static_cast<Eigen::Index>(grid_.size());
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx up = i + 1 < n ? rho_(i + 1, i) : cplx(0.0);
        const cplx dn = i > 0 ? rho_(i - 1, i) : cplx(0.0);
        s += up - dn;
    }
    return (cplx(0.0, -0.5 * hbar) * s).real();
}

CLState gaussian_state(const PositionGrid& grid, double center, double width, double momentum, double hbar) {
    if (!(width > 0.0)) throw UsageError("gaussian_state: width must be > 0");
    return from_wavefunction(grid, packet(grid, center, width, momentum, hbar));
}

CLState cat_state(const PositionGrid& grid, double center_a, double center_b, double width, double momentum,
                  double hbar) {
    if (!(width > 0.0)) throw UsageError("cat_state: width must be > 0");
    return from_wavefunction(grid, packet(grid, center_a, width, momentum, hbar) +
                                       packet(grid, center_b, width, momentum, hbar));
}

namespace {

Mat rhs_kernel(const Mat& r, const PositionGrid& grid, const CLParameters& params, Terms terms) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double dx = grid.dx();
    const double hbar = params.constants.hbar;
    const double kin = hbar * hbar / (2.0 * params.mass * dx * dx);
    const double lambda = params.decoherence_rate();
    const cplx minus_i_over_hbar(0.0, -1.0 / hbar);

    const Eigen::VectorXd x = grid.positions();
    const Eigen::VectorXd v = (0.5 * params.mass * params.omega * params.omega) * x.cwiseProduct(x);
    auto at = [&](Eigen::Index i, Eigen::Index j) -> cplx {
        return (i < 0 || j < 0 || i >= n || j >= n) ? cplx(0.0) : r(i, j);
    };

    Mat out = Mat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const cplx c = r(i, j);
            const cplx xp = at(i + 1, j), xm = at(i - 1, j);
            const cplx yp = at(i, j + 1), ym = at(i, j - 1);
            const double sep = x(i) - x(j);
            cplx acc = 0.0;
            if (terms & kUnitary) {
                const cplx h_rho = -kin * (xp - 2.0 * c + xm) + v(i) * c;
                const cplx rho_h = -kin * (yp - 2.0 * c + ym) + v(j) * c;
                acc += minus_i_over_hbar * (h_rho - rho_h);
            }
            if (terms & kDissipation) acc += -params.gamma * sep * ((xp - xm) - (yp - ym)) / (2.0 * dx);
            if (terms & kDecoherence) acc += -lambda * sep * sep * c;
            out(i, j) = acc;
        }
    }
    return out;
}

}  // namespace

Mat cl_rhs(const CLState& state, const CLParameters& params, Terms terms) {
    params.validate();
    if ((terms & kAllTerms) == 0) throw UsageError("cl_rhs: no terms enabled");
    return rhs_kernel(state.rho(), state.grid(), params, terms);
}

double max_stable_dt(const PositionGrid& grid, const CLParameters& params, Terms terms) {
    params.validate();
    const double hbar = params.constants.hbar;
    const double span = grid.extent();
    double bound = std::numeric_limits<double>::infinity();
    if (terms & kUnitary) {
        bound = std::min(bound, params.mass * grid.dx() * grid.dx() / hbar);
        const double xmax = 0.5 * span;
        const double vmax = 0.5 * params.mass * params.omega * params.omega * xmax * xmax;
        bound = std::min(bound, hbar / vmax);
    }
    if ((terms & kDissipation) && params.gamma > 0.0) {
        bound = std::min(bound, 1.0 / params.gamma);
        // advection speed gamma * |x - y| across one cell
        bound = std::min(bound, grid.dx() / (params.gamma * span));
    }
    if ((terms & kDecoherence) && params.decoherence_rate() > 0.0)
        bound = std::min(bound, 1.0 / (params.decoherence_rate() * span * span));
    return kStabilityFactor * bound;
}

std::vector<Snapshot> integrate(const CLState& rho0, const CLParameters& params, double t_final, double dt,
                                Terms terms, std::size_t snapshot_every) {
    params.validate();
    if ((terms & kAllTerms) == 0) throw UsageError("integrate: no terms enabled");
    if (!(t_final >= 0.0)) throw UsageError("integrate: t_final must be >= 0");
    if (!(dt > 0.0)) throw UsageError("integrate: dt must be > 0");
    if (snapshot_every == 0) throw UsageError("integrate: snapshot_every must be >= 1");
    const double dt_max = max_stable_dt(rho0.grid(), params, terms);
    if (dt > dt_max)
        throw UsageError("integrate: dt " + std::to_string(dt) + " exceeds stability bound " + std::to_string(dt_max));

    const auto steps = static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
    const double h = steps ? t_final / static_cast<double>(steps) : 0.0;
    const PositionGrid& grid = rho0.grid();

    std::vector<Snapshot> out;
    out.push_back({0.0, rho0});
    Mat rho = rho0.rho();
    auto rhs = [&](const Mat& m) { return rhs_kernel(m, grid, params, terms); };
    for (std::size_t s = 1; s <= steps; ++s) {
        const Mat k1 = rhs(rho);
        const Mat k2 = rhs(rho + 0.5 * h * k1);
        const Mat k3 = rhs(rho + 0.5 * h * k2);
        const Mat k4 = rhs(rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint()).eval();

        const double tr = rho.diagonal().real().sum() * grid.dx();
        if (!std::isfinite(tr) || std::abs(tr - 1.0) > kTraceDriftTol)
            throw IntegrationError("integrate: trace drift " + std::to_string(tr - 1.0) + " at step " +
                                   std::to_string(s));
        if (s % snapshot_every == 0 || s == steps) out.push_back({static_cast<double>(s) * h, CLState(rho, grid)});
    }
    return out;
}

double offdiag_coherence(const CLState& state, double separation) {
    const auto& grid = state.grid();
    if (separation < 0.0 || separation > grid.extent()) throw UsageError("offdiag_coherence: separation off grid");
    const auto k = static_cast<Eigen::Index>(std::llround(separation / grid.dx()));
    const auto n = static_cast<Eigen::Index>(grid.size());
    double s = 0.0;
    for (Eigen::Index i = 0; i + k < n; ++i) s += std::abs(state.rho()(i, i + k));
    return s / static_cast<double>(n - k);
}

std::vector<double> coherence_series(const std::vector<Snapshot>& trajectory, double separation) {
    if (trajectory.empty()) throw UsageError("coherence_series: empty trajectory");
    const double c0 = offdiag_coherence(trajectory.front().state, separation);
    if (!(c0 > 0.0)) throw UsageError("coherence_series: zero coherence at the first snapshot");
    std::vector<double> out;
    out.reserve(trajectory.size());
    for (const auto& s : trajectory) out.push_back(offdiag_coherence(s.state, separation) / c0);
    return out;
}

Timescales timescales(const std::vector<Snapshot>& trajectory, const CLParameters& params, double separation) {
    params.validate();
    if (trajectory.size() < 3) throw FitError("timescales: need at least 3 snapshots");
    const auto c = coherence_series(trajectory, separation);
    std::vector<double> ts, logs;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] > kFitFloor) {
            ts.push_back(trajectory[i].t);
            logs.push_back(std::log(c[i]));
        }
    if (ts.size() < 3) throw FitError("timescales: fewer than 3 samples above the fit floor");
    const LinearFit fit = linear_fit(ts, logs);
    if (!(fit.slope < 0.0)) throw FitError("timescales: coherence does not decay");
    if (!(params.gamma > 0.0)) throw FitError("timescales: gamma = 0, no relaxation time");

    Timescales out;
    out.tau_d = -1.0 / fit.slope;
    out.tau_r = 1.0 / params.gamma;
    out.ratio = out.tau_r / out.tau_d;
    out.dissipation_faster = out.ratio < 1.0;
    return out;
}

double predicted_timescale_ratio(const CLParameters& params, double separation) {
    const double hbar = params.constants.hbar;
    return 2.0 * params.mass * params.constants.k_B * params.temperature * separation * separation / (hbar * hbar);
}

double positivity_min_eig(const CLState& state) {
    const Mat sym = 0.5 * (state.rho() + state.rho().adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0) * state.grid().dx();
}

}  // namespace entarrow::cl
