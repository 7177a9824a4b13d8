#include "bhd/model.hpp"

#include <cmath>
#include <stdexcept>

namespace bhd {

std::string to_string(DissipationKind kind) {
    switch (kind) {
    case DissipationKind::local: return "local";
    case DissipationKind::nonlocal: return "nonlocal";
    case DissipationKind::imperfect: return "imperfect";
    }
    return "unknown";
}

DissipationKind dissipation_kind_from_string(const std::string& name) {
    if (name == "local") return DissipationKind::local;
    if (name == "nonlocal") return DissipationKind::nonlocal;
    if (name == "imperfect") return DissipationKind::imperfect;
    throw std::invalid_argument("dissipation: expected local, nonlocal or imperfect, got '" + name + "'");
}

double ModelParams::drive() const { return std::sqrt(n_scale) * f_tilde; }
double ModelParams::interaction() const { return u_tilde / n_scale; }

void ModelParams::validate() const {
    auto finite = [](double v, const char* name) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be finite");
    };
    finite(delta, "delta");
    finite(j, "j");
    finite(u_tilde, "u_tilde");
    finite(f_tilde, "f_tilde");
    finite(gamma, "gamma");
    finite(n_scale, "n_scale");
    finite(dissipation.delta_phi, "delta_phi");
    if (j < 0) throw std::invalid_argument("j must be >= 0");
    if (u_tilde < 0) throw std::invalid_argument("u_tilde must be >= 0");
    if (f_tilde < 0) throw std::invalid_argument("f_tilde must be >= 0");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be > 0");
    if (!(n_scale >= 1)) throw std::invalid_argument("n_scale must be >= 1");
}

ModelParams reference_nonlocal(double f_tilde, double n_scale) {
    ModelParams p;
    p.delta = 0.7;
    p.j = 1.5;
    p.u_tilde = 1.0;
    p.f_tilde = f_tilde;
    p.n_scale = n_scale;
    p.dissipation = Dissipation::nonlocal();
    return p;
}

ModelParams reference_local(double f_tilde, double n_scale) {
    ModelParams p;
    p.delta = 1.0;
    p.j = 1.0;
    p.u_tilde = 1.0;
    p.f_tilde = f_tilde;
    p.n_scale = n_scale;
    p.dissipation = Dissipation::local();
    return p;
}

Operator hamiltonian(const FockSpace& space, const ModelParams& params) {
    params.validate();
    const SparseMatrix a1 = annihilation(space, Mode::one).matrix;
    const SparseMatrix a2 = annihilation(space, Mode::two).matrix;
    const SparseMatrix a1d = a1.adjoint();
    const SparseMatrix a2d = a2.adjoint();
    const double F = params.drive();
    const double U = params.interaction();

    SparseMatrix h = -params.delta * SparseMatrix(a1d * a1 + a2d * a2);
    h += U * SparseMatrix(a1d * a1d * a1 * a1 + a2d * a2d * a2 * a2);
    h += F * SparseMatrix(a1d + a1 + a2d + a2);
    h -= params.j * SparseMatrix(a1d * a2 + a1 * a2d);
    h.prune(cplx(0.0));
    return Operator(space, h, Flag::yes);
}

DissipatorSpec dissipator_spec(const FockSpace& space, const ModelParams& params) {
    params.validate();
    const double g = params.gamma;
    DissipatorSpec spec;
    switch (params.dissipation.kind) {
    case DissipationKind::nonlocal: {
        const SparseMatrix l = annihilation(space, Mode::one).matrix + annihilation(space, Mode::two).matrix;
        spec.jumps.push_back({Operator(space, l, Flag::no), g});
        break;
    }
    case DissipationKind::local:
        spec.jumps.push_back({annihilation(space, Mode::one), g});
        spec.jumps.push_back({annihilation(space, Mode::two), g});
        break;
    case DissipationKind::imperfect: {
        const double h = 0.5 * params.dissipation.delta_phi;
        SparseMatrix c = std::cos(h) * annihilation(space, Mode::bonding).matrix +
                         kI * std::sin(h) * annihilation(space, Mode::antibonding).matrix;
        c.prune(cplx(0.0));
        spec.jumps.push_back({Operator(space, c, Flag::no), 2.0 * g});
        break;
    }
    }
    return spec;
}

SparseMatrix effective_hamiltonian(const Operator& h, const DissipatorSpec& diss) {
    SparseMatrix heff = h.matrix;
    for (const auto& jump : diss.jumps) {
        const SparseMatrix& l = jump.op.matrix;
        heff -= cplx(0.0, 0.5 * jump.rate) * SparseMatrix(l.adjoint() * l);
    }
    return heff;
}

} // namespace bhd
