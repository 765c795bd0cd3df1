#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "entarrow/factorization.hpp"
#include "entarrow/hilbert.hpp"

namespace entarrow {

// Entropies are in nats.

// -Tr(rho log rho) with 0 log 0 = 0. Throws PositivityError on eigenvalues
// below -kClipTol.
double von_neumann(const DensityMatrix& rho);
double von_neumann_of_spectrum(const Eigen::VectorXd& eigenvalues);

// Sum of the von Neumann entropies of every factor of F after rotating psi.
double entanglement_entropy(const PureState& psi, const Factorization& f);
// Same sum for amplitudes read directly under `dims` (no rotation).
double factor_entropy_sum(const Vec& amps, std::span<const std::size_t> dims);

// Orthogonal projectors that sum to the identity.
class MacrostateDecomposition {
public:
    MacrostateDecomposition(std::vector<Mat> projectors, std::vector<std::string> labels, HilbertSpace space);
    // Each block lists computational-basis indices; blocks must partition 0..d-1.
    static MacrostateDecomposition from_basis_partition(const std::vector<std::vector<std::size_t>>& blocks,
                                                        HilbertSpace space,
                                                        std::vector<std::string> labels = {});

    std::size_t size() const noexcept { return projectors_.size(); }
    const Mat& projector(std::size_t i) const { return projectors_.at(i); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    const HilbertSpace& space() const noexcept { return space_; }
    // Rounded trace of the projector.
    std::size_t rank(std::size_t i) const;
    // Orthonormal basis (columns) of the i-th subspace.
    Mat basis(std::size_t i) const;

private:
    std::vector<Mat> projectors_;
    std::vector<std::string> labels_;
    HilbertSpace space_;
};

inline constexpr double kDefaultMacrostateEpsilon = 0.01;

// Index i with <psi|P_i|psi> >= 1 - epsilon; NoMacrostateError if none.
std::size_t macrostate_of(const PureState& psi, const MacrostateDecomposition& d,
                          double epsilon = kDefaultMacrostateEpsilon);

// k_B log dim(H_M) of the macrostate containing psi.
double quantum_boltzmann(const PureState& psi, const MacrostateDecomposition& d,
                         double epsilon = kDefaultMacrostateEpsilon, const PhysicalConstants& constants = {});

}  // namespace entarrow
