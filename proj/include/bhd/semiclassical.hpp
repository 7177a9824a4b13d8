// Gross-Pitaevskii (mean-field) dynamics in rescaled amplitudes alpha = sqrt(N) * alpha~.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhd/hilbert.hpp"
#include "bhd/model.hpp"

namespace bhd {

struct SCState {
    cplx alpha1{0.0};
    cplx alpha2{0.0};

    cplx bonding() const;     // (alpha1 + alpha2)/sqrt2
    cplx antibonding() const; // (alpha1 - alpha2)/sqrt2
    static SCState from_modes(cplx bonding, cplx antibonding);
};

// z = |alpha1|^2 - |alpha2|^2 and phi = Arg alpha1 - Arg alpha2 in rescaled units.
double population_difference(const SCState& s);
double relative_phase(const SCState& s);

// d/dt of (alpha1, alpha2).
SCState gp_rhs(const SCState& s, const ModelParams& params);

// d/dt of (alpha_B, alpha_A) written directly in the bonding/antibonding basis
// (local and nonlocal only). Returned as SCState{dB, dA}.
SCState gp_rhs_bonding(cplx alpha_b, cplx alpha_a, const ModelParams& params);

struct SCTrajectory {
    std::vector<double> times;
    std::vector<SCState> states;
};

struct IntegrateOptions {
    double rtol{1e-10};
    double atol{1e-12};
    double record_from{0.0}; // samples before this time are not stored
    double blow_up{1e6};
};

SCTrajectory integrate(const SCState& psi0, const ModelParams& params, double t_end, double sample_dt,
                       const IntegrateOptions& options = {});

enum class Stability { asymptotically_stable, stable, unstable };
std::string to_string(Stability s);

struct Jacobian {
    Eigen::Matrix4cd matrix;              // variables (a1, a1*, a2, a2*)
    std::array<cplx, 4> eigenvalues;      // descending real part
};

Jacobian jacobian(const SCState& s, const ModelParams& params);
Stability classify(const std::array<cplx, 4>& eigenvalues, double tol = 1e-8);

struct FixedPoint {
    SCState state;
    double residual;
    Stability classification;
    std::array<cplx, 4> jacobian_eigenvalues;
    double occupation; // n = |alpha1|^2 on the symmetric plane
};

// Real positive roots n of 4U^2 n^3 - 4U D n^2 + (D^2 + g^2) n - F^2, D = delta + j,
// g = gamma (nonlocal) or gamma/2 (local).
std::vector<double> symmetric_cubic_roots(const ModelParams& params);
std::array<double, 4> symmetric_cubic_coefficients(const ModelParams& params); // c3, c2, c1, c0

std::vector<FixedPoint> symmetric_fixed_points(const ModelParams& params);

// Multistart Newton search for fixed points off the symmetric plane.
std::vector<FixedPoint> asymmetric_fixed_points(const ModelParams& params, int starts = 64, double radius = 3.0,
                                                std::uint64_t seed = 1);

struct LimitCycleSettings {
    double t_end{2000.0};
    double sample_dt{0.1};
    double transient_fraction{0.9};
    double drift_window{1000.0}; // capped at 10% of t_end
    double drift_tol{1e-3};
    IntegrateOptions integrate{};
};

struct LimitCycleReport {
    double frequency{0.0};       // angular, refined
    double raw_bin_frequency{0.0};
    double bin_width{0.0};
    double amplitude{0.0};       // peak-to-peak of z over the analysis window
    double drift{0.0};           // relative peak-to-peak change across the drift window
    double transient_discarded{0.0};
    double window_end{0.0};
    std::string observable{"z"};
};

LimitCycleReport limit_cycle(const SCState& psi0, const ModelParams& params, const LimitCycleSettings& settings = {});

struct EffectiveFrequency {
    cplx omega_plus;
    cplx omega_minus;
    bool imaginary{false};
    bool degenerate{false};
};

EffectiveFrequency effective_frequency(cplx alpha_b, const ModelParams& params);

} // namespace bhd
