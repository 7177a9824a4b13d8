// Dimer Hamiltonian and the three dissipator variants.

#pragma once

#include <string>
#include <vector>

#include "bhd/hilbert.hpp"

namespace bhd {

enum class DissipationKind { local, nonlocal, imperfect };

struct Dissipation {
    DissipationKind kind{DissipationKind::nonlocal};
    double delta_phi{0.0}; // radians, imperfect only

    static Dissipation local() { return {DissipationKind::local, 0.0}; }
    static Dissipation nonlocal() { return {DissipationKind::nonlocal, 0.0}; }
    static Dissipation imperfect(double dphi) { return {DissipationKind::imperfect, dphi}; }
};

std::string to_string(DissipationKind kind);
DissipationKind dissipation_kind_from_string(const std::string& name);

// All energies in units of gamma (gamma defaults to 1).
struct ModelParams {
    double delta{0.0};
    double j{0.0};
    double u_tilde{0.0};
    double f_tilde{0.0};
    double gamma{1.0};
    double n_scale{1.0};
    Dissipation dissipation{};

    double drive() const;       // F = sqrt(N) * F~
    double interaction() const; // U = U~ / N

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Reference parameter sets used throughout: nonlocal (0.7, 1.5, 1) and local (1, 1, 1).
ModelParams reference_nonlocal(double f_tilde, double n_scale = 1.0);
ModelParams reference_local(double f_tilde, double n_scale = 1.0);

struct JumpOperator {
    Operator op;
    double rate;
};

struct DissipatorSpec {
    std::vector<JumpOperator> jumps;
};

Operator hamiltonian(const FockSpace& space, const ModelParams& params);
DissipatorSpec dissipator_spec(const FockSpace& space, const ModelParams& params);

// H_eff = H - (i/2) sum_k gamma_k L_k^dag L_k.
SparseMatrix effective_hamiltonian(const Operator& h, const DissipatorSpec& diss);

} // namespace bhd
