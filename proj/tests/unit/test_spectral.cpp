#include <doctest.h>

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "bhd/errors.hpp"
#include "bhd/spectral.hpp"
#include "../support/oracles.hpp"

using namespace bhd;

namespace {

oracle::Model to_oracle(const ModelParams& p) {
    const int kind = p.dissipation.kind == DissipationKind::local ? 0 : p.dissipation.kind == DissipationKind::nonlocal ? 1 : 2;
    return {p.delta, p.j, p.u_tilde, p.f_tilde, p.gamma, p.n_scale, kind, p.dissipation.delta_phi};
}

std::vector<ModelParams> variants(double f) {
    ModelParams loc = reference_local(f), nl = reference_nonlocal(f), imp = reference_nonlocal(f);
    imp.dissipation = Dissipation::imperfect(0.3);
    return {loc, nl, imp};
}

// Eigenvalues of the dense oracle generator, largest real part first.
std::vector<cplx> oracle_eigenvalues(int cutoff, const ModelParams& p) {
    const auto m = to_oracle(p);
    const oracle::Mat l = oracle::liouvillian(oracle::hamiltonian(cutoff, m), oracle::jumps(cutoff, m));
    Eigen::ComplexEigenSolver<oracle::Mat> es(l, false);
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return a.real() > b.real(); });
    return v;
}

} // namespace

TEST_CASE("vectorized generator equals the kronecker oracle") {
    for (const auto& p : variants(0.4)) {
        const FockSpace s(3);
        const auto m = to_oracle(p);
        const oracle::Mat ref = oracle::liouvillian(oracle::hamiltonian(3, m), oracle::jumps(3, m));
        const Superoperator l = vectorize(s, p);
        CHECK(l.assembled());
        CHECK((DenseMatrix(l.matrix) - ref).norm() < 1e-12);
        CHECK_FALSE(generator(s, p).assembled());
    }
}

TEST_CASE("direct actions agree with the commutator form and with each other") {
    std::mt19937_64 rng(7);
    for (const auto& p : variants(0.6)) {
        const FockSpace s(4);
        const Superoperator l = vectorize(s, p);
        const auto m = to_oracle(p);
        const oracle::Mat h = oracle::hamiltonian(4, m);
        const auto js = oracle::jumps(4, m);
        const DenseMatrix rho = oracle::random_density(s.dim(), rng);
        const DenseMatrix ref = oracle::lindblad_rhs(h, js, rho);
        CHECK((apply_liouvillian(l.h, l.diss, rho) - ref).norm() < 1e-11);
        CHECK((unvec(l.matrix * vec(rho), s.dim()) - ref).norm() < 1e-11);
        // Tr[O^dag L(rho)] = Tr[L*(O)^dag rho]
        const DenseMatrix o = oracle::random_density(s.dim(), rng) + kI * oracle::random_density(s.dim(), rng);
        const cplx lhs = (o.adjoint() * apply_liouvillian(l.h, l.diss, rho)).trace();
        const cplx rhs = (apply_dual(l.h, l.diss, o).adjoint() * rho).trace();
        CHECK(std::abs(lhs - rhs) < 1e-11);
        // Trace preservation.
        CHECK(std::abs(ref.trace()) < 1e-12);
        CHECK(std::abs(apply_liouvillian(l.h, l.diss, rho).trace()) < 1e-12);
    }
}

TEST_CASE("vectorize refuses oversize problems") {
    const FockSpace s(10);
    try {
        vectorize(s, reference_nonlocal(0.4), 1000);
        FAIL("expected capacity error");
    } catch (const NumericalError& e) {
        CHECK(e.kind() == ErrorKind::capacity);
    }
}

TEST_CASE("conserved quantities") {
    const FockSpace s(5);
    for (const auto& p : variants(0.4)) {
        CHECK(dual_residual(s, p, identity(s)) < 1e-13);
        const double z = dual_residual(s, p, swap_operator(s));
        if (p.dissipation.kind == DissipationKind::nonlocal) CHECK(z < 1e-13);
        else CHECK(z > 1e-3);
    }
    // Without interaction the antibonding number is conserved under nonlocal loss, but only away
    // from the per-site truncation: check the block with n1 + n2 <= cutoff - 2.
    ModelParams lin = reference_nonlocal(0.4);
    lin.u_tilde = 0.0;
    auto interior = [&](const ModelParams& p) {
        const Superoperator l = vectorize(s, p);
        DenseMatrix d = apply_dual(l.h, l.diss, number(s, Mode::antibonding).dense());
        double worst = 0.0;
        for (Index i = 0; i < s.dim(); ++i)
            for (Index j = 0; j < s.dim(); ++j) {
                const auto [a, b] = s.labels(i);
                const auto [c, e] = s.labels(j);
                if (a + b <= s.cutoff() - 2 && c + e <= s.cutoff() - 2) worst = std::max(worst, std::abs(d(i, j)));
            }
        return worst;
    };
    CHECK(interior(lin) < 1e-12);
    CHECK(interior(reference_nonlocal(0.4)) > 1e-3);
    CHECK(dual_residual(s, lin, number(s, Mode::antibonding)) > 1e-3);
}

TEST_CASE("dense spectrum matches an independent eigensolver") {
    for (const auto& p : variants(0.5)) {
        const FockSpace s(3);
        const auto ref = oracle_eigenvalues(3, p);
        SpectrumOptions o;
        o.strategy = Strategy::dense;
        const SpectralDecomposition dec = spectrum(vectorize(s, p), 12, o);
        REQUIRE(dec.size() == 12);
        for (std::size_t i = 0; i < dec.size(); ++i) {
            CHECK(dec.residuals[i] < 1e-10);
            // Each library eigenvalue appears in the oracle list.
            double best = 1e300;
            for (const auto& r : ref) best = std::min(best, std::abs(r - dec.eigenvalues[i]));
            CHECK(best < 1e-9);
        }
        // Largest real parts agree as multisets (compare real parts in order).
        for (std::size_t i = 0; i < dec.size(); ++i) CHECK(std::abs(dec.eigenvalues[i].real() - ref[i].real()) < 1e-9);
        for (std::size_t i = 1; i < dec.size(); ++i)
            CHECK(dec.eigenvalues[i].real() <= dec.eigenvalues[i - 1].real() + dec.cluster_tolerance);
    }
}

TEST_CASE("symmetry reduction does not change the spectrum") {
    const FockSpace s(3);
    for (const auto& p : variants(0.5)) {
        SpectrumOptions with, without;
        with.strategy = without.strategy = Strategy::dense;
        without.use_symmetry = false;
        const auto a = spectrum(vectorize(s, p), 10, with);
        const auto b = spectrum(vectorize(s, p), 10, without);
        for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(a.eigenvalues[i].real() - b.eigenvalues[i].real()) < 1e-9);
    }
}

TEST_CASE("left and right eigenvectors are biorthonormal") {
    const FockSpace s(3);
    SpectrumOptions o;
    o.strategy = Strategy::dense;
    const auto dec = spectrum(vectorize(s, reference_nonlocal(0.4)), 8, o);
    REQUIRE(dec.has_left());
    for (std::size_t i = 0; i < dec.size(); ++i)
        for (std::size_t j = 0; j < dec.size(); ++j) {
            const cplx ov = (dec.left[i].adjoint() * dec.right[j]).trace();
            CHECK(std::abs(ov - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
    const Superoperator l = vectorize(s, reference_nonlocal(0.4));
    for (std::size_t i = 0; i < dec.size(); ++i) {
        const DenseMatrix r = apply_dual(l.h, l.diss, dec.left[i]) - std::conj(dec.eigenvalues[i]) * dec.left[i];
        CHECK(r.norm() / dec.left[i].norm() < 1e-9);
    }
}

TEST_CASE("shift-invert agrees with the dense route") {
    // Shift-invert finds eigenvalues nearest the shift in each sector; compare against the full dense list.
    const FockSpace s(6);
    for (const auto& p : {reference_nonlocal(0.4), reference_local(0.5)}) {
        SpectrumOptions dense, si;
        dense.strategy = Strategy::dense;
        dense.want_left = si.want_left = false;
        si.strategy = Strategy::shift_invert;
        const auto all = spectrum(vectorize(s, p), int(s.dim() * s.dim()), dense);
        const auto b = spectrum(generator(s, p), 6, si);
        REQUIRE(b.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            double best = 1e300;
            for (const auto& v : all.eigenvalues) best = std::min(best, std::abs(v - b.eigenvalues[i]));
            CHECK(best < 1e-8);
            CHECK(b.residuals[i] < 1e-8);
        }
        CHECK(all.zero_degeneracy() == b.zero_degeneracy());
        CHECK(std::abs(gaps(all, 1)[0] - gaps(b, 1)[0]) < 1e-8);
    }
}

TEST_CASE("zero-eigenvalue degeneracy per dissipation kind") {
    const FockSpace s(4);
    SpectrumOptions o;
    o.strategy = Strategy::dense;
    o.want_left = false;
    CHECK(spectrum(vectorize(s, reference_nonlocal(0.4)), 4, o).zero_degeneracy() == 2);
    CHECK(spectrum(vectorize(s, reference_local(0.4)), 4, o).zero_degeneracy() == 1);
    ModelParams imp = reference_nonlocal(0.4);
    imp.dissipation = Dissipation::imperfect(std::acos(0.99));
    CHECK(spectrum(vectorize(s, imp), 4, o).zero_degeneracy() == 1);
}

TEST_CASE("sort and cluster") {
    SpectralDecomposition d;
    d.cluster_tolerance = 1e-9;
    d.zero_tolerance = 1e-9;
    for (cplx v : {cplx(-0.5, -1.0), cplx(-0.1, 0.0), cplx(0.0, 0.0), cplx(-0.5, 1.0), cplx(1e-12, 0.0)}) {
        d.eigenvalues.push_back(v);
        d.right.push_back(DenseMatrix::Identity(1, 1) * v);
        d.sector.push_back("full");
        d.residuals.push_back(0.0);
    }
    sort_and_cluster(d);
    CHECK(d.eigenvalues[0].real() > -1e-11);
    CHECK(d.eigenvalues[2] == cplx(-0.1, 0.0));
    CHECK(d.eigenvalues[3] == cplx(-0.5, 1.0));
    CHECK(d.cluster[0] == d.cluster[1]);
    CHECK(d.degeneracy[1] == 1);
    CHECK(d.cluster[3] != d.cluster[4]);
    CHECK(d.zero_degeneracy() == 2);
    const auto g = gaps(d, 2);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == cplx(-0.1, 0.0));
    CHECK(g[1] == cplx(-0.5, 1.0));
    CHECK_THROWS_AS(gaps(d, 3), std::invalid_argument);
}

TEST_CASE("steady states match the long-time matrix exponential") {
    const int c = 3;
    const FockSpace s(c);
    std::mt19937_64 rng(11);
    for (const auto& p : variants(0.4)) {
        SpectrumOptions o;
        o.strategy = Strategy::dense;
        const SteadyStateSet ss = compute_steady_states(s, p, o);
        CHECK(std::abs(ss.r01.trace() - 1.0) < 1e-12);
        CHECK((ss.r01 - ss.r01.adjoint()).norm() < 1e-12);
        CHECK(ss.min_eigenvalue > -1e-10);
        CHECK(ss.r02.has_value() == (p.dissipation.kind == DissipationKind::nonlocal));
        if (ss.r02) {
            CHECK(std::abs(ss.r02->trace()) < 1e-12);
            CHECK(std::abs((swap_operator(s).dense() * ss.r01).trace()) < 1e-10);
        }
        const auto m = to_oracle(p);
        const oracle::Mat l = oracle::liouvillian(oracle::hamiltonian(c, m), oracle::jumps(c, m));
        const oracle::Mat prop = (l * 600.0).exp();
        for (int trial = 0; trial < 3; ++trial) {
            const DenseMatrix rho0 = oracle::random_density(s.dim(), rng, 2);
            const DenseMatrix ref = oracle::unvec(prop * oracle::vec(rho0), s.dim());
            CHECK((ss.reconstruct(rho0) - ref).norm() < 1e-8);
        }
    }
}
