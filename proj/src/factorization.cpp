#include "entarrow/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <type_traits>

#include <Eigen/Eigenvalues>

#include "entarrow/entropy.hpp"
#include "entarrow/errors.hpp"
#include "parallel.hpp"

namespace entarrow {

namespace {

constexpr double kUnitaryTol = 1e-10;

std::size_t product(std::span<const std::size_t> dims) {
    std::size_t p = 1;
    for (auto d : dims) p *= d;
    return p;
}

std::string join_groups(const std::vector<std::vector<std::size_t>>& groups) {
    std::ostringstream os;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (g) os << '|';
        os << '{';
        for (std::size_t i = 0; i < groups[g].size(); ++i) {
            if (i) os << ',';
            os << groups[g][i];
        }
        os << '}';
    }
    return os.str();
}

std::size_t log2_exact(std::size_t d) {
    if (d < 2 || (d & (d - 1)) != 0) throw UsageError("QubitPermutations: factor dimension " + std::to_string(d) +
                                                      " is not a power of two >= 2");
    std::size_t k = 0;
    while ((std::size_t{1} << k) < d) ++k;
    return k;
}

// ------------------------------------------------------------ enumeration

void assign_qubits(std::size_t q, std::size_t n, const std::vector<std::size_t>& sizes,
                   std::vector<std::vector<std::size_t>>& groups,
                   std::vector<std::vector<std::vector<std::size_t>>>& out) {
    if (q == n) {
        out.push_back(groups);
        return;
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() >= sizes[g]) continue;
        if (groups[g].empty()) {
            // groups of equal size are interchangeable: open them in order
            bool earlier_empty = false;
            for (std::size_t h = 0; h < g; ++h)
                if (sizes[h] == sizes[g] && groups[h].empty()) earlier_empty = true;
            if (earlier_empty) continue;
        }
        groups[g].push_back(q);
        assign_qubits(q + 1, n, sizes, groups, out);
        groups[g].pop_back();
    }
}

std::vector<Factorization> enumerate_qubit_permutations(const QubitPermutations& c) {
    std::vector<std::size_t> sizes;
    for (auto d : c.dims) sizes.push_back(log2_exact(d));
    std::vector<std::vector<std::size_t>> groups(sizes.size());
    std::vector<std::vector<std::vector<std::size_t>>> partitions;
    assign_qubits(0, c.n_qubits, sizes, groups, partitions);

    std::vector<Factorization> out;
    out.reserve(partitions.size());
    const std::vector<std::size_t> source(c.n_qubits, 2);
    for (const auto& p : partitions) {
        std::vector<std::size_t> order;
        for (const auto& g : p) order.insert(order.end(), g.begin(), g.end());
        out.push_back(Factorization::permutation(source, std::move(order), c.dims).with_label(join_groups(p)));
    }
    return out;
}

std::vector<Factorization> enumerate_spatial_blocks(const SpatialBlocks& c) {
    std::vector<Factorization> out;
    std::vector<std::vector<std::size_t>> seen;
    const std::size_t shifts = c.offsets ? c.block_size : 1;
    for (std::size_t offset = 0; offset < shifts; ++offset) {
        std::vector<std::vector<std::size_t>> blocks;
        std::size_t pos = 0;
        auto take = [&](std::size_t len) {
            std::vector<std::size_t> b;
            for (std::size_t i = 0; i < len && pos < c.chain_length; ++i) b.push_back(pos++);
            if (!b.empty()) blocks.push_back(std::move(b));
        };
        if (offset > 0) take(offset);
        while (pos < c.chain_length) take(c.block_size);

        std::vector<std::size_t> dims;
        for (const auto& b : blocks) dims.push_back(std::size_t{1} << b.size());
        if (std::find(seen.begin(), seen.end(), dims) != seen.end()) continue;
        seen.push_back(dims);
        out.push_back(Factorization::identity(dims).with_label(join_groups(blocks)));
    }
    return out;
}

// ----------------------------------------------------- unitary local search

struct Pair {
    Eigen::Index j, k;
};

std::vector<Pair> generator_pairs(std::size_t d) {
    std::vector<Pair> pairs;
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j + 1; k < d; ++k)
            pairs.push_back({static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)});
    return pairs;
}

// phi <- exp(delta * G_a) phi for basis generator a (exact, touches <= 2 entries).
void rotate_basis(Vec& phi, std::size_t a, double delta, std::size_t d, const std::vector<Pair>& pairs) {
    if (a < d) {
        phi(static_cast<Eigen::Index>(a)) *= std::polar(1.0, delta);
        return;
    }
    const auto& p = pairs[(a - d) / 2];
    const double c = std::cos(delta), s = std::sin(delta);
    const cplx x = phi(p.j), y = phi(p.k);
    if ((a - d) % 2 == 0) {  // E_jk - E_kj
        phi(p.j) = c * x + s * y;
        phi(p.k) = -s * x + c * y;
    } else {  // i (E_jk + E_kj)
        const cplx is(0.0, s);
        phi(p.j) = c * x + is * y;
        phi(p.k) = is * x + c * y;
    }
}

Mat reunitarize(const Mat& u) {
    Eigen::JacobiSVD<Mat> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

struct RestartResult {
    Mat rotation;
    double value = 0.0;  // entropy (not signed)
    bool improved = false;
};

RestartResult local_search(const Vec& psi, const std::vector<std::size_t>& dims, Mat u, double sign,
                           const UnitarySearchOptions& opt) {
    const std::size_t d = static_cast<std::size_t>(psi.size());
    const auto pairs = generator_pairs(d);
    const std::size_t n_params = d * d;
    auto objective = [&](const Vec& v) { return sign * factor_entropy_sum(v, dims); };

    Vec phi = u * psi;
    const double f_start = objective(phi);
    double f_cur = f_start;
    double alpha = 1.0;
    std::vector<double> grad(n_params);
    const double h = opt.fd_step;

    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        double g2 = 0.0;
        for (std::size_t a = 0; a < n_params; ++a) {
            Vec plus = phi, minus = phi;
            rotate_basis(plus, a, h, d, pairs);
            rotate_basis(minus, a, -h, d, pairs);
            grad[a] = (objective(plus) - objective(minus)) / (2.0 * h);
            g2 += grad[a] * grad[a];
        }
        const double gnorm = std::sqrt(g2);
        if (4.0 * gnorm < opt.step_tolerance) break;  // even the largest step is below tolerance

        const Mat g = generator_from_coefficients(grad, d);
        alpha = std::min(2.0 * alpha, 4.0);
        bool accepted = false;
        Mat step;
        Vec phi_new;
        double f_new = f_cur;
        while (alpha * gnorm >= opt.step_tolerance) {
            step = exp_anti_hermitian(-alpha * g);
            phi_new = step * phi;
            f_new = objective(phi_new);
            if (f_new <= f_cur - 1e-4 * alpha * g2) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        u = step * u;
        if ((it + 1) % 50 == 0) {
            u = reunitarize(u);
            phi = u * psi;
            f_cur = objective(phi);
        } else {
            phi = std::move(phi_new);
            f_cur = f_new;
        }
    }
    u = reunitarize(u);
    RestartResult r;
    r.value = factor_entropy_sum(u * psi, dims);
    r.improved = sign * r.value < f_start - 1e-12;
    r.rotation = std::move(u);
    return r;
}

ExtremumResult search_full_unitary(const PureState& psi, const FullUnitary& c, Direction direction) {
    const std::size_t d = psi.dim();
    const double sign = direction == Direction::Min ? 1.0 : -1.0;
    const auto& opt = c.options;

    std::vector<RestartResult> results(opt.restarts);
    detail::parallel_for(opt.restarts, [&](std::size_t r) {
        Mat u0 = r == 0 ? Mat::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))
                        : haar_unitary(d, derive_seed(opt.seed, r));
        results[r] = local_search(psi.amplitudes(), c.dims, std::move(u0), sign, opt);
    });

    // best signed value, ties to the lowest restart index
    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r)
        if (sign * results[r].value < sign * results[best].value) best = r;

    ExtremumResult out{Factorization::unitary(c.dims, results[best].rotation,
                                              unitary_generator_coefficients(results[best].rotation)),
                       results[best].value, opt.restarts, false, {}};
    for (const auto& r : results) {
        out.restart_values.push_back(r.value);
        out.improved = out.improved || r.improved;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- Factorization

Factorization Factorization::identity(std::vector<std::size_t> dims) {
    return Factorization(Kind::Identity, HilbertSpace(std::move(dims)));
}

Factorization Factorization::permutation(std::vector<std::size_t> source_dims, std::vector<std::size_t> order,
                                         std::vector<std::size_t> dims) {
    if (order.size() != source_dims.size()) throw UsageError("Factorization: order length mismatch");
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != i) throw UsageError("Factorization: order is not a permutation");
    if (product(source_dims) != product(dims)) throw UsageError("Factorization: dimension product mismatch");
    // the reordered source factors must group contiguously into `dims`
    std::size_t next = 0;
    for (std::size_t d : dims) {
        std::size_t acc = 1;
        while (acc < d && next < order.size()) acc *= source_dims[order[next++]];
        if (acc != d) throw UsageError("Factorization: reordered factors do not group into the target dims");
    }
    while (next < order.size() && source_dims[order[next]] == 1) ++next;
    if (next != order.size()) throw UsageError("Factorization: reordered factors do not group into the target dims");
    Factorization f(Kind::FactorPermutation, HilbertSpace(std::move(dims)));
    f.source_dims_ = std::move(source_dims);
    f.order_ = std::move(order);
    return f;
}

Factorization Factorization::unitary(std::vector<std::size_t> dims, Mat rotation, std::vector<double> generator) {
    HilbertSpace space(std::move(dims));
    const auto n = static_cast<Eigen::Index>(space.total_dim());
    if (rotation.rows() != n || rotation.cols() != n) throw UsageError("Factorization: rotation shape mismatch");
    if (!is_unitary(rotation, kUnitaryTol)) throw UsageError("Factorization: rotation is not unitary");
    Factorization f(Kind::Unitary, std::move(space));
    f.rotation_ = std::move(rotation);
    f.generator_ = std::move(generator);
    return f;
}

Mat Factorization::rotation_matrix() const {
    const auto n = static_cast<Eigen::Index>(total_dim());
    switch (kind_) {
        case Kind::Identity:
            return Mat::Identity(n, n);
        case Kind::FactorPermutation: {
            const auto map = factor_permutation_map(source_dims_, order_);
            Mat p = Mat::Zero(n, n);
            for (std::size_t out = 0; out < map.size(); ++out)
                p(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(map[out])) = 1.0;
            return p;
        }
        case Kind::Unitary:
            return rotation_;
    }
    return {};
}

PureState apply(const Factorization& f, const PureState& psi) {
    if (psi.dim() != f.total_dim())
        throw UsageError("apply: state dimension " + std::to_string(psi.dim()) +
                         " does not match factorization dimension " + std::to_string(f.total_dim()));
    switch (f.kind()) {
        case Factorization::Kind::Identity:
            return psi.relabeled(f.space());
        case Factorization::Kind::FactorPermutation:
            return PureState(permute_factors(psi.amplitudes(), f.source_dims(), f.order()), f.space());
        case Factorization::Kind::Unitary:
            return PureState::normalized(f.rotation() * psi.amplitudes(), f.space());
    }
    throw UsageError("apply: unknown factorization kind");
}

// ---------------------------------------------------------------- generators

Mat generator_from_coefficients(std::span<const double> theta, std::size_t dim) {
    if (theta.size() != dim * dim) throw UsageError("generator_from_coefficients: need dim^2 coefficients");
    const auto n = static_cast<Eigen::Index>(dim);
    Mat a = Mat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) a(j, j) = cplx(0.0, theta[static_cast<std::size_t>(j)]);
    std::size_t idx = dim;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k) {
            const double re = theta[idx++];
            const double im = theta[idx++];
            a(j, k) = cplx(re, im);
            a(k, j) = cplx(-re, im);
        }
    return a;
}

Mat exp_anti_hermitian(const Mat& a) {
    // a = iK with K Hermitian; exp(a) = V exp(i Lambda) V^dagger
    const Mat k = cplx(0.0, -1.0) * a;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (k + k.adjoint()));
    const Vec phases = (cplx(0.0, 1.0) * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<double> unitary_generator_coefficients(const Mat& unitary) {
    const auto n = unitary.rows();
    Eigen::ComplexSchur<Mat> schur(unitary);
    const Mat& t = schur.matrixT();
    const Mat& q = schur.matrixU();
    Vec log_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) log_diag(i) = cplx(0.0, std::arg(t(i, i)));
    const Mat a = q * log_diag.asDiagonal() * q.adjoint();

    std::vector<double> theta;
    theta.reserve(static_cast<std::size_t>(n * n));
    for (Eigen::Index j = 0; j < n; ++j) theta.push_back(a(j, j).imag());
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k) {
            // average with the mirrored entry to absorb rounding
            const cplx v = 0.5 * (a(j, k) - std::conj(a(k, j)));
            theta.push_back(v.real());
            theta.push_back(v.imag());
        }
    return theta;
}

// ------------------------------------------------------------------ classes

void validate(const FactorizationClass& cls) {
    std::visit(
        [](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, QubitPermutations>) {
                if (c.n_qubits == 0) throw UsageError("QubitPermutations: n_qubits must be >= 1");
                if (c.dims.empty()) throw UsageError("QubitPermutations: empty dims signature");
                std::size_t total = 0;
                for (auto d : c.dims) total += log2_exact(d);
                if (total != c.n_qubits)
                    throw UsageError("QubitPermutations: dims signature does not cover n_qubits");
            } else if constexpr (std::is_same_v<T, SpatialBlocks>) {
                if (c.block_size == 0) throw UsageError("SpatialBlocks: block size must be >= 1");
                if (c.chain_length == 0) throw UsageError("SpatialBlocks: chain length must be >= 1");
                if (c.chain_length > 30) throw UsageError("SpatialBlocks: chain length too large");
            } else if constexpr (std::is_same_v<T, FullUnitary>) {
                HilbertSpace check(c.dims);
                if (c.options.restarts < 1) throw UsageError("FullUnitary: restarts must be >= 1");
                if (!(c.options.step_tolerance > 0.0)) throw UsageError("FullUnitary: tolerance must be > 0");
                if (!(c.options.fd_step > 0.0)) throw UsageError("FullUnitary: fd_step must be > 0");
            }
        },
        cls);
}

std::string class_name(const FactorizationClass& cls) {
    static const char* names[] = {"single", "qubit_permutations", "spatial_blocks", "full_unitary"};
    return names[cls.index()];
}

std::size_t class_total_dim(const FactorizationClass& cls) {
    return std::visit(
        [](const auto& c) -> std::size_t {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, SingleFactorization>) return c.factorization.total_dim();
            else if constexpr (std::is_same_v<T, QubitPermutations>) return std::size_t{1} << c.n_qubits;
            else if constexpr (std::is_same_v<T, SpatialBlocks>) return std::size_t{1} << c.chain_length;
            else return product(c.dims);
        },
        cls);
}

std::vector<Factorization> enumerate(const FactorizationClass& cls) {
    validate(cls);
    return std::visit(
        [](const auto& c) -> std::vector<Factorization> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, SingleFactorization>) return {c.factorization};
            else if constexpr (std::is_same_v<T, QubitPermutations>) return enumerate_qubit_permutations(c);
            else if constexpr (std::is_same_v<T, SpatialBlocks>) return enumerate_spatial_blocks(c);
            else throw UsageError("enumerate: FullUnitary is not enumerable");
        },
        cls);
}

ExtremumResult extremize_entropy(const PureState& psi, const FactorizationClass& cls, Direction direction) {
    validate(cls);
    if (class_total_dim(cls) != psi.dim())
        throw UsageError("extremize_entropy: class dimension " + std::to_string(class_total_dim(cls)) +
                         " does not match state dimension " + std::to_string(psi.dim()));
    if (const auto* fu = std::get_if<FullUnitary>(&cls)) return search_full_unitary(psi, *fu, direction);

    const auto candidates = enumerate(cls);
    std::vector<double> values(candidates.size());
    detail::parallel_for(candidates.size(),
                         [&](std::size_t i) { values[i] = entanglement_entropy(psi, candidates[i]); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const bool better = direction == Direction::Min ? values[i] < values[best] : values[i] > values[best];
        if (better) best = i;
    }
    return ExtremumResult{candidates[best], values[best], candidates.size(), true, values};
}

// --------------------------------------------------------------------- EPH

std::string to_string(EphVariant v) {
    switch (v) {
        case EphVariant::Exact: return "EPH_m";
        case EphVariant::Zero: return "EPH_0";
        case EphVariant::ZeroOnClass: return "EPH_0R";
        case EphVariant::Bounded: return "EPH_leq_m";
        case EphVariant::BoundedOnClass: return "EPH_leq_mR";
    }
    return "?";
}

std::string to_string(EphStatus s) {
    switch (s) {
        case EphStatus::Satisfied: return "Satisfied";
        case EphStatus::Refuted: return "Refuted";
        case EphStatus::NumericallySupported: return "NumericallySupported";
    }
    return "?";
}

EphSpec EphSpec::exact(Factorization f, double m, double tol) {
    EphSpec s;
    s.variant = EphVariant::Exact;
    s.factorization = std::move(f);
    s.m = m;
    s.tol = tol;
    return s;
}

EphSpec EphSpec::zero(FactorizationClass cls, double tol) {
    EphSpec s;
    s.variant = EphVariant::Zero;
    s.cls = std::move(cls);
    s.tol = tol;
    return s;
}

EphSpec EphSpec::zero_on_class(FactorizationClass cls, double tol) {
    EphSpec s = zero(std::move(cls), tol);
    s.variant = EphVariant::ZeroOnClass;
    return s;
}

EphSpec EphSpec::bounded(FactorizationClass cls, double m, double tol) {
    EphSpec s;
    s.variant = EphVariant::Bounded;
    s.cls = std::move(cls);
    s.m = m;
    s.tol = tol;
    return s;
}

EphSpec EphSpec::bounded_on_class(FactorizationClass cls, double m, double tol) {
    EphSpec s = bounded(std::move(cls), m, tol);
    s.variant = EphVariant::BoundedOnClass;
    return s;
}

EphVerdict check_eph(const PureState& psi, const EphSpec& spec) {
    if (spec.m < 0.0) throw UsageError("check_eph: m must be >= 0");
    if (!(spec.tol > 0.0)) throw UsageError("check_eph: tol must be > 0");

    EphVerdict v;
    v.variant = spec.variant;
    v.tolerance = spec.tol;

    if (spec.variant == EphVariant::Exact) {
        if (!spec.factorization) throw UsageError("check_eph: EPH_m needs a factorization");
        v.extremal_value = entanglement_entropy(psi, *spec.factorization);
        v.bound = spec.m;
        v.status = std::abs(v.extremal_value - spec.m) <= spec.tol ? EphStatus::Satisfied : EphStatus::Refuted;
        v.witness = spec.factorization;
        return v;
    }

    if (!spec.cls) throw UsageError("check_eph: " + to_string(spec.variant) + " needs a factorization class");
    const bool zero_variant = spec.variant == EphVariant::Zero || spec.variant == EphVariant::ZeroOnClass;
    v.bound = zero_variant ? 0.0 : spec.m;

    const ExtremumResult ext = extremize_entropy(psi, *spec.cls, Direction::Max);
    v.extremal_value = ext.value;
    v.witness = ext.factorization;
    v.optimizer_improved = ext.improved;
    const bool infinite = std::holds_alternative<FullUnitary>(*spec.cls);
    v.restarts_used = infinite ? ext.evaluated : 0;

    if (ext.value > v.bound + spec.tol)
        v.status = EphStatus::Refuted;
    else
        v.status = infinite ? EphStatus::NumericallySupported : EphStatus::Satisfied;
    return v;
}

}  // namespace entarrow
