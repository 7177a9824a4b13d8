#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "bhd/dynamics.hpp"
#include "bhd/errors.hpp"
#include "../support/oracles.hpp"

using namespace bhd;

namespace {

oracle::Model to_oracle(const ModelParams& p) {
    const int kind = p.dissipation.kind == DissipationKind::local ? 0 : p.dissipation.kind == DissipationKind::nonlocal ? 1 : 2;
    return {p.delta, p.j, p.u_tilde, p.f_tilde, p.gamma, p.n_scale, kind, p.dissipation.delta_phi};
}

std::vector<double> grid(double t_end, double dt) {
    std::vector<double> g;
    for (int i = 0; i * dt <= t_end + 1e-12; ++i) g.push_back(i * dt);
    return g;
}

} // namespace

TEST_CASE("master equation matches the matrix exponential") {
    const int c = 3;
    const FockSpace s(c);
    std::mt19937_64 rng(3);
    ModelParams imp = reference_nonlocal(0.7);
    imp.dissipation = Dissipation::imperfect(0.5);
    for (const auto& p : {reference_nonlocal(0.7), reference_local(0.7), imp}) {
        const DenseMatrix rho0 = oracle::random_density(s.dim(), rng);
        const auto t = grid(4.0, 0.5);
        const auto obs = standard_observables(s, p.n_scale);
        const auto res = evolve_master(s, p, rho0, t, obs, {1e-10, 1e-12});
        const auto m = to_oracle(p);
        const oracle::Mat l = oracle::liouvillian(oracle::hamiltonian(c, m), oracle::jumps(c, m));
        const auto& n = res.record("n_tot");
        for (std::size_t i = 0; i < t.size(); ++i) {
            const DenseMatrix rho = oracle::unvec((l * t[i]).exp() * oracle::vec(rho0), s.dim());
            CHECK(std::abs(n.values[i] - (total_number(s).dense() * rho).trace()) < 1e-8);
        }
        const DenseMatrix ref = oracle::unvec((l * t.back()).exp() * oracle::vec(rho0), s.dim());
        CHECK((res.final_rho - ref).norm() < 1e-8);
        CHECK(std::abs(res.final_rho.trace() - 1.0) < 1e-10);
        CHECK((res.final_rho - res.final_rho.adjoint()).norm() < 1e-10);
    }
}

TEST_CASE("evolve_master rejects invalid initial states") {
    const FockSpace s(2);
    const auto p = reference_nonlocal(0.4);
    DenseMatrix bad = DenseMatrix::Identity(s.dim(), s.dim());
    CHECK_THROWS_AS(evolve_master(s, p, bad, {0.0, 1.0}, {}), std::invalid_argument);
    bad = DenseMatrix::Zero(s.dim(), s.dim());
    bad(0, 0) = 2.0;
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS(evolve_master(s, p, bad, {0.0, 1.0}, {}), std::invalid_argument);
}

TEST_CASE("linear model: field means follow the mean-field equations") {
    // With U = 0 the equations for <a1>, <a2> close exactly.
    const FockSpace s(10);
    ModelParams imp = reference_nonlocal(0.3);
    imp.dissipation = Dissipation::imperfect(0.4);
    for (ModelParams p : {reference_nonlocal(0.3), reference_local(0.3), imp}) {
        p.u_tilde = 0.0;
        const cplx x10(0.2, 0.1), x20(-0.3, 0.0);
        const StateVector psi = coherent_state(s, x10, x20);
        const DenseMatrix rho0 = psi.amplitudes * psi.amplitudes.adjoint();
        const auto t = grid(3.0, 1.0);
        const auto obs = standard_observables(s, 1.0);
        const auto res = evolve_master(s, p, rho0, t, obs, {1e-10, 1e-12});
        const auto m = to_oracle(p);
        cplx x1 = x10, x2 = x20;
        const double h = 1e-3;
        std::size_t k = 1;
        for (int step = 1; step <= 3000; ++step) {
            auto f = [&](cplx a, cplx b) { return oracle::gp(a, b, m); };
            const auto k1 = f(x1, x2);
            const auto k2 = f(x1 + 0.5 * h * k1.first, x2 + 0.5 * h * k1.second);
            const auto k3 = f(x1 + 0.5 * h * k2.first, x2 + 0.5 * h * k2.second);
            const auto k4 = f(x1 + h * k3.first, x2 + h * k3.second);
            x1 += h / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
            x2 += h / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
            if (step % 1000 == 0) {
                CHECK(std::abs(res.record("a1").values[k] - x1) < 1e-6);
                CHECK(std::abs(res.record("a2").values[k] - x2) < 1e-6);
                ++k;
            }
        }
    }
}

TEST_CASE("trajectory seeds") {
    CHECK(strong_mix(1, 0) != strong_mix(1, 1));
    CHECK(strong_mix(1, 0) != strong_mix(2, 0));
    CHECK(strong_mix(42, 7) == strong_mix(42, 7));
}

TEST_CASE("ensemble is deterministic and thread-count independent") {
    const FockSpace s(5);
    const auto p = reference_nonlocal(0.4);
    const StateVector psi = coherent_state(s, 0.0, 0.8);
    const auto t = grid(5.0, 0.5);
    auto obs = standard_observables(s, 1.0);
    EnsembleOptions one, two;
    one.threads = 1;
    two.threads = 2;
    const auto a = ensemble(s, p, psi, t, obs, 12, 99, one);
    const auto b = ensemble(s, p, psi, t, obs, 12, 99, two);
    const auto c = ensemble(s, p, psi, t, obs, 12, 100, one);
    CHECK(a.total_jumps == b.total_jumps);
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(a.get("n_tot").mean[k] == b.get("n_tot").mean[k]);
        CHECK(a.get("z2").mean[k] == b.get("z2").mean[k]);
    }
    bool differs = false;
    for (std::size_t k = 0; k < t.size(); ++k) differs = differs || a.get("n_tot").mean[k] != c.get("n_tot").mean[k];
    CHECK(differs);
    // Trajectory i depends only on (master seed, i).
    const auto single = mcwf_trajectory(s, p, psi, t, obs, strong_mix(99, 3));
    CHECK(single.record("n_tot").values.back() == a.trajectories[3].record("n_tot").values.back());
    const auto lone = ensemble(s, p, psi, t, obs, 1, 99, one);
    CHECK_FALSE(lone.get("n_tot").stderr_re.has_value());
}

TEST_CASE("trajectory norm and records") {
    const FockSpace s(5);
    const auto p = reference_local(0.5);
    const StateVector psi = basis_state(s, 0, 2);
    const auto t = grid(10.0, 0.5);
    const auto r = mcwf_trajectory(s, p, psi, t, standard_observables(s, 1.0), 5);
    CHECK(r.final_psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.times.size() == t.size());
    CHECK(r.record("n_tot").values[0].real() == doctest::Approx(2.0));
    CHECK(r.jumps >= 0);
}

TEST_CASE("g2 of a coherent steady state is one") {
    const FockSpace s(8);
    ModelParams p = reference_local(0.4);
    p.u_tilde = 0.0;
    const SteadyStateSet ss = compute_steady_states(s, p);
    const auto t = grid(6.0, 1.0);
    const auto g = g2_tau(s, p, ss.r01, Mode::one, t, {1e-10, 1e-12});
    for (double v : g) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g2_long_time(ss, ss.r01, s, Mode::one) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("g2 of the vacuum is undefined") {
    const FockSpace s(3);
    DenseMatrix vac = DenseMatrix::Zero(s.dim(), s.dim());
    vac(0, 0) = 1.0;
    try {
        g2_tau(s, reference_local(0.0), vac, Mode::one, {0.0, 1.0});
        FAIL("expected throw");
    } catch (const NumericalError& e) {
        CHECK(e.kind() == ErrorKind::undefined_correlation);
    }
}

TEST_CASE("Q function of a coherent state") {
    const FockSpace s(20);
    const double n_scale = 2.0;
    const cplx al(0.6 * std::sqrt(n_scale), -0.3 * std::sqrt(n_scale));
    const StateVector psi = coherent_state(s, al, 0.0);
    const DenseMatrix rho = psi.amplitudes * psi.amplitudes.adjoint();
    const QGrid g{-2.5, 2.5, 101, -2.5, 2.5, 101};
    const QFunction q = q_function(s, rho, Mode::one, g, n_scale);
    CHECK(q.integral(n_scale) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_FALSE(q.edge_warning);
    for (int iy = 0; iy < 101; iy += 10)
        for (int ix = 0; ix < 101; ix += 10) {
            const cplx beta = std::sqrt(n_scale) * cplx(q.x[ix], q.y[iy]);
            CHECK(q.values(iy, ix) == doctest::Approx(std::exp(-std::norm(beta - al)) / M_PI).epsilon(1e-9));
        }
}
