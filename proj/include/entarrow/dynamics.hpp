#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "entarrow/factorization.hpp"
#include "entarrow/hilbert.hpp"

namespace entarrow {

// Largest dimension the eigendecomposition-based propagator accepts.
inline constexpr std::size_t kMaxDynamicsDim = std::size_t{1} << 12;

// Hermitian generator of closed-system dynamics. Stores its spectral
// decomposition, so repeated evolution costs one basis change each way.
// Diagonal Hamiltonians skip the decomposition and the dense matrix.
class Hamiltonian {
public:
    // Throws UsageError if `matrix` is not Hermitian within kHermTol.
    Hamiltonian(Mat matrix, HilbertSpace space);
    static Hamiltonian diagonal(Eigen::VectorXd energies, HilbertSpace space);

    const HilbertSpace& space() const noexcept { return space_; }
    std::size_t dim() const noexcept { return space_.total_dim(); }
    bool is_diagonal() const noexcept { return diagonal_; }

    Mat matrix() const;
    const Eigen::VectorXd& eigenvalues() const noexcept { return energies_; }

    Vec apply(const Vec& v) const;
    double expectation(const PureState& psi) const;
    // exp(-i H t / hbar) v
    Vec propagate(const Vec& v, double t, double hbar) const;

private:
    Hamiltonian(HilbertSpace space) : space_(std::move(space)) {}

    HilbertSpace space_;
    bool diagonal_ = false;
    Eigen::VectorXd energies_;
    Mat eigenvectors_;  // empty when diagonal_
    Mat matrix_;        // empty when diagonal_
};

// exp(-i H t / hbar) psi.
PureState evolve(const PureState& psi, const Hamiltonian& h, double t, const PhysicalConstants& constants = {});

// Pure-dephasing qubit bath H = sz(S) (x) sum_k g_k sz(k); system is factor 0.
struct SpinBathModel {
    std::size_t n_env = 0;
    std::vector<double> couplings;
    std::uint64_t seed = 0;
};

struct SpinBath {
    SpinBathModel model;
    Hamiltonian hamiltonian;
};

inline constexpr double kDefaultCouplingLo = 0.5;
inline constexpr double kDefaultCouplingHi = 1.5;

// Couplings drawn uniformly from [lo, hi] with the given seed.
SpinBath build_spin_bath(std::size_t n_env, double lo, double hi, std::uint64_t seed);
SpinBath spin_bath_from_couplings(std::vector<double> couplings);

// ((|0>+|1>)/sqrt2) (x) |+>^{n_env}
PureState spin_bath_initial_state(std::size_t n_env);

// r(t) = <E_1(t)|E_2(t)> for the two environment branches conditioned on
// the system basis states, starting from spin_bath_initial_state().
std::vector<cplx> environment_overlap(const SpinBathModel& model, const Hamiltonian& h,
                                      std::span<const double> times, const PhysicalConstants& constants = {});

// <E_1|E_2> of a (1 + n_env)-qubit state, system as factor 0.
cplx branch_overlap(const PureState& psi);

struct OverlapSample {
    double t = 0.0;
    cplx r;
};

// First time |r| <= threshold, linearly interpolated; nullopt when the
// series never crosses.
std::optional<double> decoherence_time(std::span<const OverlapSample> series, double threshold);

// S_ent^F(psi(t)) at every time.
std::vector<double> entanglement_trajectory(const PureState& psi0, const Hamiltonian& h, const Factorization& f,
                                            std::span<const double> times,
                                            const PhysicalConstants& constants = {});

}  // namespace entarrow
