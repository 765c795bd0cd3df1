#include "entarrow/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "entarrow/errors.hpp"

namespace entarrow {

namespace {

using RowMajorMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<std::size_t> checked_keep(const HilbertSpace& space, std::span<const std::size_t> keep) {
    if (keep.empty()) throw UsageError("partial_trace: keep set is empty");
    std::vector<std::size_t> k(keep.begin(), keep.end());
    std::sort(k.begin(), k.end());
    if (std::adjacent_find(k.begin(), k.end()) != k.end())
        throw UsageError("partial_trace: keep set has duplicates");
    if (k.back() >= space.factors())
        throw UsageError("partial_trace: factor index " + std::to_string(k.back()) + " out of range");
    return k;
}

// keep factors first (ascending), then the traced ones (ascending).
std::vector<std::size_t> keep_first_order(const HilbertSpace& space, const std::vector<std::size_t>& keep) {
    std::vector<std::size_t> order = keep;
    for (std::size_t f = 0; f < space.factors(); ++f)
        if (!std::binary_search(keep.begin(), keep.end(), f)) order.push_back(f);
    return order;
}

std::vector<std::size_t> sub_dims(const HilbertSpace& space, const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> d;
    d.reserve(idx.size());
    for (auto i : idx) d.push_back(space.dim(i));
    return d;
}

Vec gaussian_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        z(i) = cplx(re, im);
    }
    return z;
}

}  // namespace

// ---------------------------------------------------------------- HilbertSpace

HilbertSpace::HilbertSpace(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw UsageError("HilbertSpace: needs at least one factor");
    for (auto d : dims_) {
        if (d == 0) throw UsageError("HilbertSpace: factor dimension must be >= 1");
        total_ *= d;
    }
}

HilbertSpace HilbertSpace::qubits(std::size_t n) {
    if (n == 0) throw UsageError("HilbertSpace::qubits: n must be >= 1");
    return HilbertSpace(std::vector<std::size_t>(n, 2));
}

std::vector<std::size_t> HilbertSpace::strides() const {
    std::vector<std::size_t> s(dims_.size());
    std::size_t acc = 1;
    for (std::size_t k = dims_.size(); k-- > 0;) {
        s[k] = acc;
        acc *= dims_[k];
    }
    return s;
}

void PhysicalConstants::validate() const {
    if (!(hbar > 0.0)) throw UsageError("PhysicalConstants: hbar must be > 0");
    if (!(k_B > 0.0)) throw UsageError("PhysicalConstants: k_B must be > 0");
}

// ------------------------------------------------------------------ PureState

PureState::PureState(Vec amplitudes, HilbertSpace space)
    : amps_(std::move(amplitudes)), space_(std::move(space)) {
    if (static_cast<std::size_t>(amps_.size()) != space_.total_dim())
        throw UsageError("PureState: amplitude count " + std::to_string(amps_.size()) +
                         " does not match dimension " + std::to_string(space_.total_dim()));
    if (std::abs(amps_.norm() - 1.0) > kNormTol)
        throw UsageError("PureState: vector is not normalized");
}

PureState PureState::normalized(Vec amplitudes, HilbertSpace space) {
    const double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw UsageError("PureState::normalized: zero or non-finite vector");
    amplitudes /= n;
    return PureState(std::move(amplitudes), std::move(space));
}

PureState PureState::basis(HilbertSpace space, std::size_t index) {
    if (index >= space.total_dim()) throw UsageError("PureState::basis: index out of range");
    Vec v = Vec::Zero(static_cast<Eigen::Index>(space.total_dim()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(std::move(v), std::move(space));
}

PureState PureState::relabeled(HilbertSpace space) const {
    if (space.total_dim() != space_.total_dim())
        throw UsageError("PureState::relabeled: dimension mismatch");
    return PureState(amps_, std::move(space));
}

// -------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(Mat matrix, HilbertSpace space) : rho_(std::move(matrix)), space_(std::move(space)) {
    const auto n = static_cast<Eigen::Index>(space_.total_dim());
    if (rho_.rows() != n || rho_.cols() != n) throw UsageError("DensityMatrix: shape does not match space");
    if (!is_hermitian(rho_, kHermTol)) throw UsageError("DensityMatrix: matrix is not Hermitian");
    if (std::abs(rho_.trace() - cplx(1.0)) > kTraceTol) throw UsageError("DensityMatrix: trace is not 1");
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    Mat rho = psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityMatrix(std::move(rho), psi.space());
}

DensityMatrix DensityMatrix::maximally_mixed(HilbertSpace space) {
    const auto n = static_cast<Eigen::Index>(space.total_dim());
    Mat rho = Mat::Identity(n, n) / static_cast<double>(n);
    return DensityMatrix(std::move(rho), std::move(space));
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

// ----------------------------------------------------------------- operations

PureState tensor(std::span<const PureState> parts) {
    if (parts.empty()) throw UsageError("tensor: empty list of states");
    std::vector<std::size_t> dims;
    Vec acc = Vec::Ones(1);
    for (const auto& p : parts) {
        dims.insert(dims.end(), p.space().dims().begin(), p.space().dims().end());
        const auto& a = p.amplitudes();
        Vec next(acc.size() * a.size());
        for (Eigen::Index i = 0; i < acc.size(); ++i) next.segment(i * a.size(), a.size()) = acc(i) * a;
        acc = std::move(next);
    }
    return PureState::normalized(std::move(acc), HilbertSpace(std::move(dims)));
}

PureState tensor(std::initializer_list<PureState> parts) {
    return tensor(std::span<const PureState>(parts.begin(), parts.size()));
}

std::vector<std::size_t> factor_permutation_map(std::span<const std::size_t> dims,
                                                std::span<const std::size_t> order) {
    const std::size_t n = dims.size();
    if (order.size() != n) throw UsageError("permute_factors: order length mismatch");
    std::vector<bool> seen(n, false);
    for (auto o : order) {
        if (o >= n || seen[o]) throw UsageError("permute_factors: order is not a permutation");
        seen[o] = true;
    }
    std::size_t total = 1;
    for (auto d : dims) total *= d;

    // stride in the output index of each input factor
    std::vector<std::size_t> out_stride(n);
    std::size_t acc = 1;
    for (std::size_t j = n; j-- > 0;) {
        out_stride[order[j]] = acc;
        acc *= dims[order[j]];
    }
    std::vector<std::size_t> map(total);
    std::vector<std::size_t> digit(n, 0);
    std::size_t out_idx = 0;
    for (std::size_t in_idx = 0; in_idx < total; ++in_idx) {
        map[out_idx] = in_idx;
        // odometer over input digits, last factor fastest
        for (std::size_t k = n; k-- > 0;) {
            if (++digit[k] < dims[k]) {
                out_idx += out_stride[k];
                break;
            }
            digit[k] = 0;
            out_idx -= (dims[k] - 1) * out_stride[k];
        }
    }
    return map;
}

Vec permute_factors(const Vec& amps, std::span<const std::size_t> dims, std::span<const std::size_t> order) {
    const auto map = factor_permutation_map(dims, order);
    if (map.size() != static_cast<std::size_t>(amps.size())) throw UsageError("permute_factors: size mismatch");
    Vec out(amps.size());
    for (std::size_t i = 0; i < map.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = amps(static_cast<Eigen::Index>(map[i]));
    return out;
}

DensityMatrix partial_trace(const PureState& psi, std::span<const std::size_t> keep) {
    const auto& space = psi.space();
    const auto k = checked_keep(space, keep);
    const auto order = keep_first_order(space, k);
    const auto kept_dims = sub_dims(space, k);
    std::size_t dk = 1;
    for (auto d : kept_dims) dk *= d;
    const std::size_t dr = space.total_dim() / dk;

    const Vec permuted = permute_factors(psi.amplitudes(), space.dims(), order);
    Eigen::Map<const RowMajorMat> m(permuted.data(), static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dr));
    Mat rho = m * m.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return DensityMatrix(std::move(rho), HilbertSpace(kept_dims));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
    const auto& space = rho.space();
    const auto k = checked_keep(space, keep);
    const auto order = keep_first_order(space, k);
    const auto kept_dims = sub_dims(space, k);
    std::size_t dk = 1;
    for (auto d : kept_dims) dk *= d;
    const std::size_t dr = space.total_dim() / dk;

    const auto flat = factor_permutation_map(space.dims(), order);

    const Mat& full = rho.matrix();
    Mat red = Mat::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t a = 0; a < dk; ++a)
        for (std::size_t b = 0; b < dk; ++b) {
            cplx s = 0.0;
            for (std::size_t r = 0; r < dr; ++r) s += full(static_cast<Eigen::Index>(flat[a * dr + r]), static_cast<Eigen::Index>(flat[b * dr + r]));
            red(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
        }
    red = 0.5 * (red + red.adjoint()).eval();
    red /= red.trace().real();
    return DensityMatrix(std::move(red), HilbertSpace(kept_dims));
}

DensityMatrix partial_trace(const PureState& psi, std::initializer_list<std::size_t> keep) {
    return partial_trace(psi, std::span<const std::size_t>(keep.begin(), keep.size()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep) {
    return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

DensityMatrix reduced_factor(const PureState& psi, std::size_t factor) {
    const auto& space = psi.space();
    if (factor >= space.factors()) throw UsageError("reduced_factor: factor index out of range");
    const std::size_t d = space.dim(factor);
    std::size_t inner = 1;
    for (std::size_t k = factor + 1; k < space.factors(); ++k) inner *= space.dim(k);
    const std::size_t outer = space.total_dim() / (d * inner);
    const Vec& a = psi.amplitudes();

    Mat rho = Mat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t o = 0; o < outer; ++o) {
        // block of shape d x inner, row-major inside the flat vector
        Eigen::Map<const RowMajorMat> blk(a.data() + static_cast<Eigen::Index>(o * d * inner),
                                          static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(inner));
        rho.noalias() += blk * blk.adjoint();
    }
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return DensityMatrix(std::move(rho), HilbertSpace({d}));
}

double purity(const DensityMatrix& rho) {
    // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return rho.matrix().squaredNorm();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over a mix of both inputs
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

PureState haar_sample(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw UsageError("haar_sample: dim must be >= 1");
    return haar_sample(HilbertSpace({dim}), seed);
}

PureState haar_sample(const HilbertSpace& space, std::uint64_t seed) {
    if (space.total_dim() == 1) return PureState(Vec::Ones(1), space);
    std::mt19937_64 rng(seed);
    return PureState::normalized(gaussian_vector(space.total_dim(), rng), space);
}

PureState haar_sample_in_subspace(const Mat& basis, const HilbertSpace& space, std::uint64_t seed) {
    if (static_cast<std::size_t>(basis.rows()) != space.total_dim())
        throw UsageError("haar_sample_in_subspace: basis rows must equal the space dimension");
    if (basis.cols() < 1) throw UsageError("haar_sample_in_subspace: empty basis");
    const Mat gram = basis.adjoint() * basis;
    if (!gram.isIdentity(1e-10)) throw UsageError("haar_sample_in_subspace: basis is not orthonormal");
    std::mt19937_64 rng(seed);
    const Vec coeffs = gaussian_vector(static_cast<std::size_t>(basis.cols()), rng);
    return PureState::normalized(basis * coeffs, space);
}

Mat haar_unitary(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw UsageError("haar_unitary: dim must be >= 1");
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(dim);
    Mat z(n, n);
    for (Eigen::Index c = 0; c < n; ++c) z.col(c) = gaussian_vector(dim, rng);
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = std::abs(r(i, i));
        if (a > 0.0) q.col(i) *= r(i, i) / a;
    }
    return q;
}

bool is_hermitian(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

bool is_unitary(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const Mat g = m.adjoint() * m;
    return (g - Mat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace entarrow
