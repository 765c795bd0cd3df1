#include "entarrow/dynamics.hpp"

#include <cmath>
#include <random>
#include <string>

#include "entarrow/entropy.hpp"
#include "entarrow/errors.hpp"

namespace entarrow {

Hamiltonian::Hamiltonian(Mat matrix, HilbertSpace space) : space_(std::move(space)) {
    const auto n = static_cast<Eigen::Index>(space_.total_dim());
    if (matrix.rows() != n || matrix.cols() != n) throw UsageError("Hamiltonian: shape does not match space");
    if (space_.total_dim() > kMaxDynamicsDim) throw UsageError("Hamiltonian: dimension exceeds 2^12 cap");
    if (!is_hermitian(matrix, kHermTol)) throw UsageError("Hamiltonian: matrix is not Hermitian");
    matrix_ = 0.5 * (matrix + matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(matrix_);
    energies_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
}

Hamiltonian Hamiltonian::diagonal(Eigen::VectorXd energies, HilbertSpace space) {
    if (static_cast<std::size_t>(energies.size()) != space.total_dim())
        throw UsageError("Hamiltonian::diagonal: size does not match space");
    if (!energies.allFinite()) throw UsageError("Hamiltonian::diagonal: non-finite energy");
    Hamiltonian h(std::move(space));
    h.diagonal_ = true;
    h.energies_ = std::move(energies);
    return h;
}

Mat Hamiltonian::matrix() const {
    if (diagonal_) return energies_.cast<cplx>().asDiagonal();
    return matrix_;
}

Vec Hamiltonian::apply(const Vec& v) const {
    if (diagonal_) return energies_.cast<cplx>().cwiseProduct(v);
    return matrix_ * v;
}

double Hamiltonian::expectation(const PureState& psi) const {
    return psi.amplitudes().dot(apply(psi.amplitudes())).real();
}

Vec Hamiltonian::propagate(const Vec& v, double t, double hbar) const {
    if (static_cast<std::size_t>(v.size()) != dim()) throw UsageError("Hamiltonian::propagate: dimension mismatch");
    const Vec phases = (cplx(0.0, -t / hbar) * energies_.cast<cplx>()).array().exp();
    if (diagonal_) return phases.cwiseProduct(v);
    return eigenvectors_ * phases.cwiseProduct(eigenvectors_.adjoint() * v);
}

PureState evolve(const PureState& psi, const Hamiltonian& h, double t, const PhysicalConstants& constants) {
    constants.validate();
    if (psi.dim() != h.dim()) throw UsageError("evolve: state and Hamiltonian dimensions differ");
    if (t == 0.0) return psi;
    return PureState(h.propagate(psi.amplitudes(), t, constants.hbar), psi.space());
}

// ------------------------------------------------------------------ spin bath

SpinBath spin_bath_from_couplings(std::vector<double> couplings) {
    const std::size_t n_env = couplings.size();
    if (n_env == 0) throw UsageError("spin bath: n_env must be >= 1");
    if (n_env + 1 > 12) throw UsageError("spin bath: 1 + n_env qubits exceeds the 2^12 cap");
    const std::size_t dim = std::size_t{1} << (n_env + 1);
    Eigen::VectorXd diag(static_cast<Eigen::Index>(dim));
    for (std::size_t idx = 0; idx < dim; ++idx) {
        // qubit 0 is the most significant bit; |0> has sz = +1
        const double zs = (idx >> n_env) & 1u ? -1.0 : 1.0;
        double bath = 0.0;
        for (std::size_t k = 0; k < n_env; ++k) {
            const double zk = (idx >> (n_env - 1 - k)) & 1u ? -1.0 : 1.0;
            bath += couplings[k] * zk;
        }
        diag(static_cast<Eigen::Index>(idx)) = zs * bath;
    }
    SpinBathModel model{n_env, std::move(couplings), 0};
    return SpinBath{std::move(model), Hamiltonian::diagonal(std::move(diag), HilbertSpace::qubits(n_env + 1))};
}

SpinBath build_spin_bath(std::size_t n_env, double lo, double hi, std::uint64_t seed) {
    if (n_env == 0) throw UsageError("build_spin_bath: n_env must be >= 1");
    if (!(lo > 0.0 && lo <= hi)) throw UsageError("build_spin_bath: need 0 < lo <= hi");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    std::vector<double> g(n_env);
    for (auto& gk : g) gk = uni(rng);
    SpinBath bath = spin_bath_from_couplings(std::move(g));
    bath.model.seed = seed;
    return bath;
}

PureState spin_bath_initial_state(std::size_t n_env) {
    const double a = 1.0 / std::sqrt(2.0);
    const PureState plus(Vec::Constant(2, a), HilbertSpace({2}));
    std::vector<PureState> parts(n_env + 1, plus);
    return tensor(parts);
}

cplx branch_overlap(const PureState& psi) {
    const auto& space = psi.space();
    if (space.factors() < 2 || space.dim(0) != 2) throw UsageError("branch_overlap: system must be a leading qubit");
    const Eigen::Index half = static_cast<Eigen::Index>(psi.dim() / 2);
    const Vec& a = psi.amplitudes();
    // |E_i> = sqrt2 * (branch i); <E_1|E_2> = 2 <branch0|branch1>
    return 2.0 * a.head(half).dot(a.tail(half));
}

std::vector<cplx> environment_overlap(const SpinBathModel& model, const Hamiltonian& h,
                                      std::span<const double> times, const PhysicalConstants& constants) {
    if (h.dim() != (std::size_t{1} << (model.n_env + 1)))
        throw UsageError("environment_overlap: Hamiltonian does not match the model size");
    const PureState psi0 = spin_bath_initial_state(model.n_env);
    std::vector<cplx> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(branch_overlap(evolve(psi0, h, t, constants)));
    return out;
}

std::optional<double> decoherence_time(std::span<const OverlapSample> series, double threshold) {
    if (series.empty()) throw UsageError("decoherence_time: empty series");
    if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("decoherence_time: threshold must lie in (0, 1)");
    double prev_t = series[0].t;
    double prev_a = std::abs(series[0].r);
    if (prev_a <= threshold) return prev_t;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double a = std::abs(series[i].r);
        const double t = series[i].t;
        if (a <= threshold) return prev_t + (prev_a - threshold) * (t - prev_t) / (prev_a - a);
        prev_t = t;
        prev_a = a;
    }
    return std::nullopt;
}

std::vector<double> entanglement_trajectory(const PureState& psi0, const Hamiltonian& h, const Factorization& f,
                                            std::span<const double> times, const PhysicalConstants& constants) {
    if (psi0.dim() != h.dim() || psi0.dim() != f.total_dim())
        throw UsageError("entanglement_trajectory: inconsistent dimensions");
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(entanglement_entropy(evolve(psi0, h, t, constants), f));
    return out;
}

}  // namespace entarrow
