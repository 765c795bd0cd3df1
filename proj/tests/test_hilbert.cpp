#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "entarrow/errors.hpp"
#include "entarrow/hilbert.hpp"

using namespace entarrow;

namespace {

PureState ket(std::vector<cplx> v, std::vector<std::size_t> dims) {
    Vec a(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) a(static_cast<Eigen::Index>(i)) = v[i];
    return PureState::normalized(a, HilbertSpace(std::move(dims)));
}

PureState q0() { return ket({1, 0}, {2}); }
PureState q1() { return ket({0, 1}, {2}); }

}  // namespace

TEST_CASE("HilbertSpace rejects empty and zero dimensions") {
    CHECK_THROWS_AS(HilbertSpace({}), UsageError);
    CHECK_THROWS_AS(HilbertSpace({2, 0}), UsageError);
    const HilbertSpace h({2, 3, 4});
    CHECK(h.total_dim() == 24);
    CHECK(h.strides() == std::vector<std::size_t>{12, 4, 1});
    CHECK(HilbertSpace::qubits(3).dims() == std::vector<std::size_t>{2, 2, 2});
}

TEST_CASE("PureState requires unit norm") {
    Vec v(2);
    v << 1.0, 1.0;
    CHECK_THROWS_AS(PureState(v, HilbertSpace({2})), UsageError);
    CHECK_THROWS_AS(PureState(Vec::Zero(3), HilbertSpace({2})), UsageError);
    CHECK_THROWS_AS(PureState::normalized(Vec::Zero(2), HilbertSpace({2})), UsageError);
    CHECK(PureState::normalized(v, HilbertSpace({2})).amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("tensor follows the row-major convention") {
    const auto s = tensor({q0(), q1()});
    CHECK(s.dim() == 4);
    CHECK(std::abs(s.amplitudes()(1) - cplx(1.0)) < 1e-15);

    const auto same = tensor({q1()});
    CHECK((same.amplitudes() - q1().amplitudes()).norm() == 0.0);

    const auto plus = ket({1, 1}, {2});
    const auto e = tensor({plus, q0()});
    const double r = 1.0 / std::sqrt(2.0);
    Vec want(4);
    want << r, 0, r, 0;
    CHECK((e.amplitudes() - want).norm() < 1e-15);
    CHECK(e.space().dims() == std::vector<std::size_t>{2, 2});
}

TEST_CASE("partial trace of a Bell pair is maximally mixed") {
    const auto bell = ket({0, 1, 1, 0}, {2, 2});
    const auto ra = partial_trace(bell, {0});
    CHECK((ra.matrix() - Mat::Identity(2, 2) * 0.5).norm() < 1e-15);
    CHECK(purity(ra) == doctest::Approx(0.5));
    CHECK(purity(partial_trace(bell, {1})) == doctest::Approx(0.5));
}

TEST_CASE("keeping every factor returns the projector") {
    const auto psi = haar_sample(HilbertSpace({2, 3}), 7);
    const auto rho = partial_trace(psi, {0, 1});
    const Mat want = psi.amplitudes() * psi.amplitudes().adjoint();
    CHECK((rho.matrix() - want).norm() < 1e-14);
    CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("three-qubit example: the ancilla is pure") {
    // (|01> + |10>)/sqrt2 (x) |0>
    const auto psi = ket({0, 0, 1, 0, 1, 0, 0, 0}, {2, 2, 2});
    const auto rc = partial_trace(psi, {2});
    Mat want = Mat::Zero(2, 2);
    want(0, 0) = 1.0;
    CHECK((rc.matrix() - want).norm() < 1e-14);
    CHECK((partial_trace(psi, {0}).matrix() - Mat::Identity(2, 2) * 0.5).norm() < 1e-14);
}

TEST_CASE("partial trace rejects bad index sets") {
    const auto psi = haar_sample(HilbertSpace({2, 2}), 1);
    CHECK_THROWS_AS(partial_trace(psi, {2}), UsageError);
    CHECK_THROWS_AS(partial_trace(psi, {0, 0}), UsageError);
    CHECK_THROWS_AS(partial_trace(psi, std::initializer_list<std::size_t>{}), UsageError);
}

TEST_CASE("purity examples") {
    CHECK(purity(DensityMatrix::from_pure(q0())) == doctest::Approx(1.0));
    CHECK(purity(DensityMatrix::maximally_mixed(HilbertSpace({2}))) == doctest::Approx(0.5));
}

TEST_CASE("DensityMatrix validation") {
    Mat m = Mat::Identity(2, 2);
    CHECK_THROWS_AS(DensityMatrix(m, HilbertSpace({2})), UsageError);  // trace 2
    Mat nh(2, 2);
    nh << 0.5, 0.1, 0.0, 0.5;
    CHECK_THROWS_AS(DensityMatrix(nh, HilbertSpace({2})), UsageError);
}

TEST_CASE("haar_sample determinism and the one-dimensional case") {
    const auto a = haar_sample(32, 99);
    const auto b = haar_sample(32, 99);
    CHECK((a.amplitudes() - b.amplitudes()).norm() == 0.0);
    CHECK((a.amplitudes() - haar_sample(32, 100).amplitudes()).norm() > 0.1);

    const auto one = haar_sample(1, 12345);
    CHECK(one.dim() == 1);
    CHECK(std::abs(one.amplitudes()(0) - cplx(1.0)) < 1e-15);
}

TEST_CASE("haar amplitudes have uniform second moment") {
    const std::size_t d = 32, n = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::norm(haar_sample(d, derive_seed(2024, i)).amplitudes()(5));
        sum += p;
        sum2 += p * p;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0 / d) < 3.0 * se);
}

TEST_CASE("haar unitaries are unitary and seeded") {
    const Mat u = haar_unitary(6, 3);
    CHECK(is_unitary(u, 1e-12));
    CHECK((u - haar_unitary(6, 3)).norm() == 0.0);
}

TEST_CASE("subspace sampling stays inside the span") {
    Mat basis = Mat::Zero(4, 2);
    basis(0, 0) = 1.0;
    basis(3, 1) = 1.0;
    const auto psi = haar_sample_in_subspace(basis, HilbertSpace({2, 2}), 5);
    CHECK(std::abs(psi.amplitudes()(1)) == 0.0);
    CHECK(std::abs(psi.amplitudes()(2)) == 0.0);
    CHECK(psi.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("factor permutation swaps qubits") {
    const auto s = tensor({q0(), q1()});
    const std::vector<std::size_t> dims{2, 2}, order{1, 0};
    const Vec out = permute_factors(s.amplitudes(), dims, order);
    CHECK(std::abs(out(2) - cplx(1.0)) < 1e-15);

    const std::vector<std::size_t> d3{2, 3, 4}, o3{2, 0, 1};
    const auto map = factor_permutation_map(d3, o3);
    std::vector<bool> seen(24, false);
    for (auto m : map) seen.at(m) = true;
    for (bool b : seen) CHECK(b);
}

// ----------------------------------------------------------------- properties

TEST_CASE("property: complementary reductions share a spectrum") {
    const std::vector<std::vector<std::size_t>> shapes{{2, 2}, {2, 3}, {3, 4}, {2, 2, 2}, {2, 3, 2}};
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto psi = haar_sample(HilbertSpace(shapes[k]), derive_seed(k, seed));
            const auto ra = partial_trace(psi, {0});
            std::vector<std::size_t> rest;
            for (std::size_t f = 1; f < shapes[k].size(); ++f) rest.push_back(f);
            const auto rb = partial_trace(psi, rest);
            CHECK(ra.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(rb.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
            const auto ea = ra.eigenvalues();
            const auto eb = rb.eigenvalues();
            // Nonzero parts agree; the larger side pads with zeros.
            const Eigen::Index na = ea.size(), nb = eb.size();
            const Eigen::Index m = std::min(na, nb);
            for (Eigen::Index i = 0; i < m; ++i) CHECK(std::abs(ea(na - 1 - i) - eb(nb - 1 - i)) < 1e-9);
            for (Eigen::Index i = m; i < std::max(na, nb); ++i) {
                const double z = na > nb ? ea(na - 1 - i) : eb(nb - 1 - i);
                CHECK(std::abs(z) < 1e-9);
            }
        }
    }
}

TEST_CASE("property: tensor then trace recovers the factor") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = haar_sample(3, derive_seed(seed, 0));
        const auto b = haar_sample(4, derive_seed(seed, 1));
        const auto ra = partial_trace(tensor({a, b}), {0});
        const Mat want = a.amplitudes() * a.amplitudes().adjoint();
        CHECK((ra.matrix() - want).norm() < 1e-12);
        CHECK(purity(ra) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("property: pure-state and density-matrix traces agree") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto psi = haar_sample(HilbertSpace({2, 3, 2}), seed);
        const auto rho = DensityMatrix::from_pure(psi);
        for (const std::vector<std::size_t>& keep :
             std::vector<std::vector<std::size_t>>{{0}, {1}, {2}, {0, 2}, {1, 2}, {0, 1}}) {
            CHECK((partial_trace(psi, keep).matrix() - partial_trace(rho, keep).matrix()).norm() < 1e-13);
        }
        for (std::size_t f = 0; f < 3; ++f) {
            const std::vector<std::size_t> keep{f};
            CHECK((reduced_factor(psi, f).matrix() - partial_trace(psi, keep).matrix()).norm() < 1e-13);
        }
    }
}

TEST_CASE("property: haar samples are normalized") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::size_t d = 1 + seed % 40;
        CHECK(std::abs(haar_sample(d, seed).amplitudes().norm() - 1.0) < 1e-12);
    }
}
