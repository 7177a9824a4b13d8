#include <doctest.h>

#include "bhd/model.hpp"
#include "../support/oracles.hpp"

using namespace bhd;

namespace {
oracle::Model to_oracle(const ModelParams& p) {
    const int kind = p.dissipation.kind == DissipationKind::local ? 0 : p.dissipation.kind == DissipationKind::nonlocal ? 1 : 2;
    return {p.delta, p.j, p.u_tilde, p.f_tilde, p.gamma, p.n_scale, kind, p.dissipation.delta_phi};
}
} // namespace

TEST_CASE("hamiltonian matches hand assembly at cutoff 3") {
    ModelParams p = reference_nonlocal(0.4, 2.0);
    const FockSpace s(3);
    const Operator h = hamiltonian(s, p);
    CHECK((h.dense() - oracle::hamiltonian(3, to_oracle(p))).norm() < 1e-13);
    CHECK(h.hermiticity_defect() < 1e-15);
    // A few elements by hand: <1,0|H|0,0> = F, <1,1|H|1,1> = -2 delta, <2,0|H|2,0> = -2 delta + 2U.
    const DenseMatrix hd = h.dense();
    const double f = std::sqrt(2.0) * 0.4, u = 0.5;
    CHECK(std::abs(hd(s.index(1, 0), s.index(0, 0)) - f) < 1e-14);
    CHECK(std::abs(hd(s.index(1, 1), s.index(1, 1)) - (-2 * 0.7)) < 1e-14);
    CHECK(std::abs(hd(s.index(2, 0), s.index(2, 0)) - (-2 * 0.7 + 2 * u)) < 1e-14);
    CHECK(std::abs(hd(s.index(0, 1), s.index(1, 0)) - (-1.5)) < 1e-14);
}

TEST_CASE("dissipators") {
    const FockSpace s(3);
    for (auto d : {Dissipation::local(), Dissipation::nonlocal(), Dissipation::imperfect(std::acos(0.99))}) {
        ModelParams p = reference_nonlocal(0.3);
        p.dissipation = d;
        const DissipatorSpec spec = dissipator_spec(s, p);
        const auto ref = oracle::jumps(3, to_oracle(p));
        // Compare the dissipators through the sum of L^dag L and the L . L^dag superoperator action.
        oracle::Mat sum = oracle::Mat::Zero(s.dim(), s.dim()), ref_sum = sum;
        for (const auto& j : spec.jumps) sum += j.rate * j.op.dense().adjoint() * j.op.dense();
        for (const auto& j : ref) ref_sum += j.rate * j.l.adjoint() * j.l;
        CHECK((sum - ref_sum).norm() < 1e-13);
        const oracle::Mat h = oracle::hamiltonian(3, to_oracle(p));
        CHECK((oracle::liouvillian(h, ref) - oracle::liouvillian(hamiltonian(s, p).dense(),
                                                                 [&] {
                                                                     std::vector<oracle::Jump> js;
                                                                     for (const auto& j : spec.jumps)
                                                                         js.push_back({j.op.dense(), j.rate});
                                                                     return js;
                                                                 }()))
                  .norm() < 1e-12);
    }
}

TEST_CASE("effective hamiltonian") {
    const FockSpace s(2);
    const ModelParams p = reference_local(0.5);
    const Operator h = hamiltonian(s, p);
    const DissipatorSpec d = dissipator_spec(s, p);
    const DenseMatrix heff = DenseMatrix(effective_hamiltonian(h, d));
    const DenseMatrix n = total_number(s).dense();
    CHECK((heff - (h.dense() - 0.5 * kI * n)).norm() < 1e-14);
}

TEST_CASE("parameter validation names the field") {
    ModelParams p = reference_nonlocal(0.4);
    p.gamma = -1.0;
    try {
        p.validate();
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("gamma") != std::string::npos);
    }
    p = reference_nonlocal(0.4);
    p.n_scale = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK(dissipation_kind_from_string("imperfect") == DissipationKind::imperfect);
    CHECK_THROWS_AS(dissipation_kind_from_string("global"), std::invalid_argument);
    CHECK(reference_nonlocal(0.4, 3.0).drive() == doctest::Approx(0.4 * std::sqrt(3.0)));
    CHECK(reference_nonlocal(0.4, 4.0).interaction() == doctest::Approx(0.25));
}
