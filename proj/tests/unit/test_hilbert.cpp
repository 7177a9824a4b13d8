#include <doctest.h>

#include "bhd/hilbert.hpp"
#include "../support/oracles.hpp"

using namespace bhd;

TEST_CASE("fock space indexing") {
    const FockSpace s(3);
    CHECK(s.dim_site() == 4);
    CHECK(s.dim() == 16);
    CHECK(s.index(2, 1) == 9);
    CHECK(s.labels(9) == std::pair<int, int>{2, 1});
    for (Index i = 0; i < s.dim(); ++i) {
        const auto [n1, n2] = s.labels(i);
        CHECK(s.index(n1, n2) == i);
    }
    CHECK_THROWS_AS(FockSpace(0), std::invalid_argument);
    CHECK_THROWS_AS(s.index(4, 0), std::out_of_range);
}

TEST_CASE("ladder operators match kronecker construction") {
    for (int c : {1, 3, 5}) {
        const FockSpace s(c);
        CHECK((annihilation(s, Mode::one).dense() - oracle::a1(c)).norm() < 1e-14);
        CHECK((annihilation(s, Mode::two).dense() - oracle::a2(c)).norm() < 1e-14);
        CHECK((creation(s, Mode::two).dense() - oracle::a2(c).adjoint()).norm() < 1e-14);
        const oracle::Mat ab = (oracle::a1(c) + oracle::a2(c)) / std::sqrt(2.0);
        const oracle::Mat aa = (oracle::a1(c) - oracle::a2(c)) / std::sqrt(2.0);
        CHECK((annihilation(s, Mode::bonding).dense() - ab).norm() < 1e-14);
        CHECK((number(s, Mode::antibonding).dense() - aa.adjoint() * aa).norm() < 1e-13);
    }
}

TEST_CASE("canonical commutator holds below the cutoff") {
    const FockSpace s(4);
    const DenseMatrix a = annihilation(s, Mode::one).dense();
    const DenseMatrix c = a * a.adjoint() - a.adjoint() * a;
    for (Index i = 0; i < s.dim(); ++i) {
        const auto [n1, n2] = s.labels(i);
        CHECK(std::abs(c(i, i) - (n1 < 4 ? 1.0 : -4.0)) < 1e-14);
    }
}

TEST_CASE("swap operator") {
    const FockSpace s(3);
    const Operator z = swap_operator(s);
    const DenseMatrix zd = z.dense();
    CHECK((zd * zd - DenseMatrix::Identity(s.dim(), s.dim())).norm() < 1e-14);
    CHECK(z.hermiticity_defect() == 0.0);
    const DenseMatrix a1 = annihilation(s, Mode::one).dense();
    const DenseMatrix a2 = annihilation(s, Mode::two).dense();
    CHECK((zd * a1 * zd - a2).norm() < 1e-14);
    CHECK(max_abs(commutator(z.matrix, annihilation(s, Mode::bonding).matrix)) < 1e-14);
    CHECK((zd * basis_state(s, 2, 1).amplitudes - basis_state(s, 1, 2).amplitudes).norm() < 1e-14);
}

TEST_CASE("coherent state photon statistics are Poissonian") {
    const FockSpace s(30);
    const cplx al1(0.8, -0.3), al2(-1.1, 0.5);
    const StateVector psi = coherent_state(s, al1, al2);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(psi.truncation_deficit < 1e-12);
    CHECK_FALSE(psi.cutoff_warning);
    for (int n1 = 0; n1 <= 6; ++n1)
        for (int n2 = 0; n2 <= 6; ++n2) {
            const double p = std::norm(psi.amplitudes(s.index(n1, n2)));
            CHECK(p == doctest::Approx(oracle::poisson(std::norm(al1), n1) * oracle::poisson(std::norm(al2), n2))
                           .epsilon(1e-10));
        }
    const Vector a1psi = annihilation(s, Mode::one).matrix * psi.amplitudes;
    CHECK(std::abs(psi.amplitudes.dot(a1psi) - al1) < 1e-10);
}

TEST_CASE("truncated coherent state records its deficit") {
    const FockSpace s(4);
    const StateVector psi = coherent_state(s, 2.0, 0.0);
    CHECK(psi.norm() == doctest::Approx(1.0));
    CHECK(psi.truncation_deficit > 0.1);
    CHECK(psi.cutoff_warning);
}

TEST_CASE("reduced density of a product state") {
    const FockSpace s(5);
    const StateVector psi = coherent_state(s, 0.7, cplx(0.0, 0.4));
    const DenseMatrix rho = psi.amplitudes * psi.amplitudes.adjoint();
    const DenseMatrix r1 = reduced_density(s, rho, Mode::one);
    CHECK(r1.rows() == 6);
    CHECK(std::abs(r1.trace() - 1.0) < 1e-13);
    CHECK(((r1 * r1).trace().real()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(reduced_density(s, rho, Mode::bonding), std::invalid_argument);
}
