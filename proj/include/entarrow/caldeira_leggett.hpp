#pragma once

#include <cstddef>
#include <vector>

#include "entarrow/hilbert.hpp"

namespace entarrow::cl {

// Uniform grid x_i = (i - (n-1)/2) dx, centered at 0. Dirichlet boundary:
// the density kernel vanishes outside the grid.
class PositionGrid {
public:
    PositionGrid(std::size_t n_points, double dx);

    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    double x(std::size_t i) const noexcept { return (static_cast<double>(i) - 0.5 * static_cast<double>(n_ - 1)) * dx_; }
    // Distance between the outermost points.
    double extent() const noexcept { return static_cast<double>(n_ - 1) * dx_; }
    Eigen::VectorXd positions() const;

    bool operator==(const PositionGrid&) const = default;

private:
    std::size_t n_;
    double dx_;
};

inline constexpr std::size_t kDefaultGridPoints = 128;

struct CLParameters {
    double mass = 1.0;
    double gamma = 0.0;        // relaxation rate
    double temperature = 1.0;  // bath temperature
    double omega = 1.0;        // trap frequency
    PhysicalConstants constants;

    void validate() const;
    // Lambda = 2 M gamma k_B T / hbar^2
    double decoherence_rate() const;
};

// Density kernel rho(x_i, y_j) on the grid. Positivity is tracked, not enforced.
class CLState {
public:
    CLState(Mat rho, PositionGrid grid);

    const Mat& rho() const noexcept { return rho_; }
    const PositionGrid& grid() const noexcept { return grid_; }
    // sum_i rho(x_i, x_i) dx
    double trace() const;
    // sum_ij |rho_ij|^2 dx^2
    double purity() const;
    double mean_position() const;
    double mean_momentum(double hbar = 1.0) const;

private:
    Mat rho_;
    PositionGrid grid_;
};

// Gaussian packet (2 pi w^2)^{-1/4} exp(-(x-c)^2/(4 w^2) + i p x / hbar),
// renormalized on the grid.
CLState gaussian_state(const PositionGrid& grid, double center, double width, double momentum = 0.0,
                       double hbar = 1.0);
// Equal-weight superposition of two such packets.
CLState cat_state(const PositionGrid& grid, double center_a, double center_b, double width, double momentum = 0.0,
                  double hbar = 1.0);

enum Term : unsigned { kUnitary = 1u, kDissipation = 2u, kDecoherence = 4u };
using Terms = unsigned;
inline constexpr Terms kAllTerms = kUnitary | kDissipation | kDecoherence;

// Time derivative of the enabled terms:
//   unitary      -(i/hbar)[H, rho],  H = p^2/2M + M w^2 x^2 / 2
//   dissipation  -gamma (x - y)(d/dx - d/dy) rho
//   decoherence  -Lambda (x - y)^2 rho
// with second-order central differences.
Mat cl_rhs(const CLState& state, const CLParameters& params, Terms terms);

// Largest step the fixed-step integrator accepts for these terms.
double max_stable_dt(const PositionGrid& grid, const CLParameters& params, Terms terms);

struct Snapshot {
    double t = 0.0;
    CLState state;
};

// Classical RK4; the step is shrunk so that t_final is hit exactly. Returns
// t = 0, every `snapshot_every`-th step and the final step.
std::vector<Snapshot> integrate(const CLState& rho0, const CLParameters& params, double t_final, double dt,
                                Terms terms, std::size_t snapshot_every = 1);

// Mean |rho(x, x + s)| over the band at separation s (rounded to the grid).
double offdiag_coherence(const CLState& state, double separation);
// offdiag_coherence at every snapshot divided by its value at the first one.
std::vector<double> coherence_series(const std::vector<Snapshot>& trajectory, double separation);

struct Timescales {
    double tau_d = 0.0;  // fitted decoherence time
    double tau_r = 0.0;  // 1 / gamma
    double ratio = 0.0;  // tau_r / tau_d
    // ratio < 1: dissipation outruns decoherence (the unrealistic regime)
    bool dissipation_faster = false;
};

Timescales timescales(const std::vector<Snapshot>& trajectory, const CLParameters& params, double separation);

// tau_R / tau_D predicted from the equation's coefficients: 2 M k_B T s^2 / hbar^2.
double predicted_timescale_ratio(const CLParameters& params, double separation);

// Smallest eigenvalue of the symmetrized kernel times dx.
double positivity_min_eig(const CLState& state);

}  // namespace entarrow::cl
