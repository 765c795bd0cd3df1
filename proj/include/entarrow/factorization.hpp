#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "entarrow/hilbert.hpp"

namespace entarrow {

// A tensor-product reading F: H -> H_1 (x) ... (x) H_N of a Hilbert space.
// The rotation is applied to the state first, then the amplitudes are read
// under the target signature `dims`. Three rotation forms are supported so
// that permutations on large qubit registers never materialize a matrix.
class Factorization {
public:
    enum class Kind { Identity, FactorPermutation, Unitary };

    static Factorization identity(std::vector<std::size_t> dims);
    // Reorder the factors of `source_dims` (output factor j = source factor
    // order[j]), then read the result under `dims`.
    static Factorization permutation(std::vector<std::size_t> source_dims, std::vector<std::size_t> order,
                                     std::vector<std::size_t> dims);
    // `generator` optionally records real coefficients of an anti-Hermitian
    // generator with rotation = exp(A); see unitary_generator_coefficients().
    static Factorization unitary(std::vector<std::size_t> dims, Mat rotation, std::vector<double> generator = {});

    Kind kind() const noexcept { return kind_; }
    const HilbertSpace& space() const noexcept { return space_; }
    const std::vector<std::size_t>& dims() const noexcept { return space_.dims(); }
    std::size_t total_dim() const noexcept { return space_.total_dim(); }

    const std::vector<std::size_t>& source_dims() const noexcept { return source_dims_; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }
    const Mat& rotation() const noexcept { return rotation_; }
    const std::vector<double>& generator() const noexcept { return generator_; }

    // Dense rotation matrix for every kind (identity / permutation materialized).
    Mat rotation_matrix() const;

    // Human-readable grouping, e.g. "{0,1}|{2}". Empty unless set by the enumerator.
    const std::string& label() const noexcept { return label_; }
    Factorization& with_label(std::string label) {
        label_ = std::move(label);
        return *this;
    }

private:
    Factorization(Kind kind, HilbertSpace space) : kind_(kind), space_(std::move(space)) {}

    Kind kind_;
    HilbertSpace space_;
    std::vector<std::size_t> source_dims_;
    std::vector<std::size_t> order_;
    Mat rotation_;
    std::vector<double> generator_;
    std::string label_;
};

// Rotated state carrying F's signature.
PureState apply(const Factorization& f, const PureState& psi);

// ------------------------------------------------------------------ classes

struct SingleFactorization {
    Factorization factorization;
};

// Set partitions of `n_qubits` qubit positions into groups of sizes
// log2(dims[i]); groups of equal size are unordered.
struct QubitPermutations {
    std::size_t n_qubits = 0;
    std::vector<std::size_t> dims;
};

// Contiguous blocks of `block_size` qubits on a chain of `chain_length`.
// With `offsets` every shift 0..block_size-1 of the tiling is included.
struct SpatialBlocks {
    std::size_t block_size = 1;
    std::size_t chain_length = 1;
    bool offsets = false;
};

struct UnitarySearchOptions {
    std::size_t restarts = 8;
    double step_tolerance = 1e-8;
    std::size_t max_iterations = 2000;
    double fd_step = 1e-6;
    std::uint64_t seed = 0;
};

struct FullUnitary {
    std::vector<std::size_t> dims;
    UnitarySearchOptions options;
};

using FactorizationClass = std::variant<SingleFactorization, QubitPermutations, SpatialBlocks, FullUnitary>;

void validate(const FactorizationClass& cls);
std::string class_name(const FactorizationClass& cls);
std::size_t class_total_dim(const FactorizationClass& cls);

// Finite classes only; FullUnitary throws UsageError.
std::vector<Factorization> enumerate(const FactorizationClass& cls);

enum class Direction { Min, Max };

struct ExtremumResult {
    Factorization factorization;
    double value = 0.0;
    // Factorizations visited (finite classes) or restarts run (FullUnitary).
    std::size_t evaluated = 0;
    // False when no restart moved away from its initial point.
    bool improved = true;
    std::vector<double> restart_values;
};

ExtremumResult extremize_entropy(const PureState& psi, const FactorizationClass& cls, Direction direction);

// Real coefficients theta (length d^2) of the anti-Hermitian generator:
// [Im A_jj for j] then for each j<k: Re A_jk, Im A_jk.
std::vector<double> unitary_generator_coefficients(const Mat& unitary);
Mat generator_from_coefficients(std::span<const double> theta, std::size_t dim);
// exp(A) for anti-Hermitian A.
Mat exp_anti_hermitian(const Mat& a);

// --------------------------------------------------------------------- EPH

enum class EphVariant { Exact, Zero, ZeroOnClass, Bounded, BoundedOnClass };
enum class EphStatus { Satisfied, Refuted, NumericallySupported };

std::string to_string(EphVariant v);
std::string to_string(EphStatus s);

struct EphSpec {
    EphVariant variant = EphVariant::Exact;
    std::optional<Factorization> factorization;  // Exact only
    std::optional<FactorizationClass> cls;       // every other variant
    double m = 0.0;
    double tol = 1e-9;

    static EphSpec exact(Factorization f, double m, double tol);
    static EphSpec zero(FactorizationClass cls, double tol);
    static EphSpec zero_on_class(FactorizationClass cls, double tol);
    static EphSpec bounded(FactorizationClass cls, double m, double tol = 1e-9);
    static EphSpec bounded_on_class(FactorizationClass cls, double m, double tol = 1e-9);
};

struct EphVerdict {
    EphVariant variant = EphVariant::Exact;
    EphStatus status = EphStatus::Refuted;
    std::optional<Factorization> witness;
    double extremal_value = 0.0;
    double bound = 0.0;
    double tolerance = 0.0;
    std::size_t restarts_used = 0;
    bool optimizer_improved = true;
};

EphVerdict check_eph(const PureState& psi, const EphSpec& spec);

}  // namespace entarrow
