#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace entarrow {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr double kNormTol = 1e-12;
inline constexpr double kHermTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
// Eigenvalues in [-kClipTol, 0) are treated as zero; below that is a real violation.
inline constexpr double kClipTol = 1e-10;

// Ordered tensor-product signature d_1 x ... x d_N. Index convention is
// row-major: the last factor varies fastest, so |i_1 ... i_N> sits at
// sum_k i_k * prod_{j>k} d_j.
class HilbertSpace {
public:
    explicit HilbertSpace(std::vector<std::size_t> dims);
    static HilbertSpace qubits(std::size_t n);

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t factors() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t factor) const { return dims_.at(factor); }
    std::size_t total_dim() const noexcept { return total_; }

    // Stride of each factor in the flat index.
    std::vector<std::size_t> strides() const;

    bool operator==(const HilbertSpace& other) const = default;

private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 1;
};

struct PhysicalConstants {
    double hbar = 1.0;
    double k_B = 1.0;

    void validate() const;
};

class PureState {
public:
    // Throws UsageError unless the vector has unit norm within kNormTol.
    PureState(Vec amplitudes, HilbertSpace space);
    // Rescales a non-zero vector to unit norm.
    static PureState normalized(Vec amplitudes, HilbertSpace space);
    static PureState basis(HilbertSpace space, std::size_t index);

    const Vec& amplitudes() const noexcept { return amps_; }
    const HilbertSpace& space() const noexcept { return space_; }
    std::size_t dim() const noexcept { return space_.total_dim(); }

    // Same amplitudes read under a different factor signature.
    PureState relabeled(HilbertSpace space) const;

private:
    Vec amps_;
    HilbertSpace space_;
};

class DensityMatrix {
public:
    // Checks Hermiticity and unit trace. Positivity is checked where a
    // spectrum is actually taken (von Neumann entropy).
    DensityMatrix(Mat matrix, HilbertSpace space);
    static DensityMatrix from_pure(const PureState& psi);
    static DensityMatrix maximally_mixed(HilbertSpace space);

    const Mat& matrix() const noexcept { return rho_; }
    const HilbertSpace& space() const noexcept { return space_; }
    std::size_t dim() const noexcept { return space_.total_dim(); }

    // Eigenvalues in ascending order.
    Eigen::VectorXd eigenvalues() const;

private:
    Mat rho_;
    HilbertSpace space_;
};

PureState tensor(std::span<const PureState> parts);
PureState tensor(std::initializer_list<PureState> parts);

// Reduced state on the factors listed in `keep`, in ascending factor order.
DensityMatrix partial_trace(const PureState& psi, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const PureState& psi, std::initializer_list<std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep);

// Reduced state of one factor. Cheaper than the general path.
DensityMatrix reduced_factor(const PureState& psi, std::size_t factor);

double purity(const DensityMatrix& rho);

// Normalized vector of independent standard complex Gaussians.
PureState haar_sample(std::size_t dim, std::uint64_t seed);
PureState haar_sample(const HilbertSpace& space, std::uint64_t seed);
// Haar-random unit vector inside the span of the orthonormal columns of `basis`.
PureState haar_sample_in_subspace(const Mat& basis, const HilbertSpace& space, std::uint64_t seed);
// Haar-random unitary (QR of a Ginibre matrix with phase fix).
Mat haar_unitary(std::size_t dim, std::uint64_t seed);

// Deterministic per-stream seed from (master seed, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Index map for reordering tensor factors so that output factor j is input
// factor `order[j]`: map[output index] = input index.
std::vector<std::size_t> factor_permutation_map(std::span<const std::size_t> dims,
                                                std::span<const std::size_t> order);
// The same reordering applied to a flat vector.
Vec permute_factors(const Vec& amps, std::span<const std::size_t> dims,
                    std::span<const std::size_t> order);

bool is_hermitian(const Mat& m, double tol);
bool is_unitary(const Mat& m, double tol);

}  // namespace entarrow
