#include "entarrow/entropy.hpp"

#include <cmath>
#include <string>

#include "entarrow/errors.hpp"

namespace entarrow {

namespace {

using RowMajorMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kProjectorTol = 1e-10;

}  // namespace

double von_neumann_of_spectrum(const Eigen::VectorXd& eigenvalues) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const double p = eigenvalues(i);
        if (p < -kClipTol)
            throw PositivityError("von_neumann: eigenvalue " + std::to_string(p) + " below -1e-10");
        if (p > 0.0) s -= p * std::log(p);
    }
    return s;
}

double von_neumann(const DensityMatrix& rho) { return von_neumann_of_spectrum(rho.eigenvalues()); }

double factor_entropy_sum(const Vec& amps, std::span<const std::size_t> dims) {
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    if (total != static_cast<std::size_t>(amps.size()))
        throw UsageError("factor_entropy_sum: dimension mismatch");
    if (dims.size() < 2) return 0.0;

    double sum = 0.0;
    std::size_t outer = 1;
    for (std::size_t f = 0; f < dims.size(); ++f) {
        const std::size_t d = dims[f];
        const std::size_t inner = total / (outer * d);
        if (d > 1) {
            Mat rho = Mat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            for (std::size_t o = 0; o < outer; ++o) {
                Eigen::Map<const RowMajorMat> blk(amps.data() + static_cast<Eigen::Index>(o * d * inner),
                                                  static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(inner));
                rho.noalias() += blk * blk.adjoint();
            }
            Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
            sum += von_neumann_of_spectrum(es.eigenvalues());
        }
        outer *= d;
    }
    return sum;
}

double entanglement_entropy(const PureState& psi, const Factorization& f) {
    if (psi.dim() != f.total_dim())
        throw UsageError("entanglement_entropy: state dimension " + std::to_string(psi.dim()) +
                         " does not match factorization dimension " + std::to_string(f.total_dim()));
    const PureState rotated = apply(f, psi);
    return factor_entropy_sum(rotated.amplitudes(), rotated.space().dims());
}

// ------------------------------------------------------ MacrostateDecomposition

MacrostateDecomposition::MacrostateDecomposition(std::vector<Mat> projectors, std::vector<std::string> labels,
                                                 HilbertSpace space)
    : projectors_(std::move(projectors)), labels_(std::move(labels)), space_(std::move(space)) {
    if (projectors_.empty()) throw UsageError("MacrostateDecomposition: no projectors");
    if (labels_.empty())
        for (std::size_t i = 0; i < projectors_.size(); ++i) labels_.push_back("M" + std::to_string(i));
    if (labels_.size() != projectors_.size())
        throw UsageError("MacrostateDecomposition: one label per projector required");

    const auto n = static_cast<Eigen::Index>(space_.total_dim());
    Mat sum = Mat::Zero(n, n);
    for (std::size_t i = 0; i < projectors_.size(); ++i) {
        const Mat& p = projectors_[i];
        if (p.rows() != n || p.cols() != n) throw UsageError("MacrostateDecomposition: projector shape mismatch");
        if ((p - p.adjoint()).cwiseAbs().maxCoeff() > kProjectorTol)
            throw UsageError("MacrostateDecomposition: projector " + std::to_string(i) + " is not Hermitian");
        if ((p * p - p).cwiseAbs().maxCoeff() > kProjectorTol)
            throw UsageError("MacrostateDecomposition: projector " + std::to_string(i) + " is not idempotent");
        for (std::size_t j = 0; j < i; ++j)
            if ((p * projectors_[j]).cwiseAbs().maxCoeff() > kProjectorTol)
                throw UsageError("MacrostateDecomposition: projectors " + std::to_string(j) + " and " +
                                 std::to_string(i) + " are not orthogonal");
        sum += p;
    }
    if ((sum - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > kProjectorTol)
        throw UsageError("MacrostateDecomposition: projectors do not sum to the identity");
}

MacrostateDecomposition MacrostateDecomposition::from_basis_partition(
    const std::vector<std::vector<std::size_t>>& blocks, HilbertSpace space, std::vector<std::string> labels) {
    const auto n = static_cast<Eigen::Index>(space.total_dim());
    std::vector<Mat> projectors;
    for (const auto& block : blocks) {
        Mat p = Mat::Zero(n, n);
        for (auto idx : block) {
            if (idx >= space.total_dim()) throw UsageError("from_basis_partition: basis index out of range");
            const auto i = static_cast<Eigen::Index>(idx);
            if (p(i, i) != cplx(0.0)) throw UsageError("from_basis_partition: repeated basis index");
            p(i, i) = 1.0;
        }
        projectors.push_back(std::move(p));
    }
    return MacrostateDecomposition(std::move(projectors), std::move(labels), std::move(space));
}

std::size_t MacrostateDecomposition::rank(std::size_t i) const {
    return static_cast<std::size_t>(std::llround(projector(i).trace().real()));
}

Mat MacrostateDecomposition::basis(std::size_t i) const {
    Eigen::SelfAdjointEigenSolver<Mat> es(projector(i));
    const std::size_t r = rank(i);
    // eigenvalues ascending: the rank-many ones sit at the end
    return es.eigenvectors().rightCols(static_cast<Eigen::Index>(r));
}

std::size_t macrostate_of(const PureState& psi, const MacrostateDecomposition& d, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw UsageError("macrostate_of: epsilon must lie in (0, 0.5)");
    if (psi.dim() != d.space().total_dim()) throw UsageError("macrostate_of: dimension mismatch");
    const Vec& a = psi.amplitudes();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = a.dot(d.projector(i) * a).real();
        if (w >= 1.0 - epsilon) return i;
    }
    throw NoMacrostateError("macrostate_of: no projector holds weight >= " + std::to_string(1.0 - epsilon));
}

double quantum_boltzmann(const PureState& psi, const MacrostateDecomposition& d, double epsilon,
                         const PhysicalConstants& constants) {
    constants.validate();
    const std::size_t i = macrostate_of(psi, d, epsilon);
    return constants.k_B * std::log(static_cast<double>(d.rank(i)));
}

}  // namespace entarrow
