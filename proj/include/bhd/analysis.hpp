// Observable extraction and time-series post-processing.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bhd/hilbert.hpp"

namespace bhd {

struct Observable {
    std::string name;
    SparseMatrix op;
};

// Named operators: n_tot (n_tot/N), z ((n1 - n2)/N), z2, a_b, a_a, a1, a2.
std::vector<Observable> standard_observables(const FockSpace& space, double n_scale);

cplx expectation(const DenseMatrix& rho, const Operator& o);
cplx expectation(const StateVector& psi, const Operator& o);
cplx expectation(const DenseMatrix& rho, const SparseMatrix& o);
cplx expectation(const Vector& psi, const SparseMatrix& o); // normalized by <psi|psi>

// phi = Arg<a1> - Arg<a2>, wrapped to (-pi, pi].
double relative_phase(cplx a1, cplx a2);

struct FourierPeak {
    double frequency; // angular, units of gamma
    double magnitude;
    double bin;       // refined fractional bin index
    double bin_width; // angular width of one bin
};

// Hann-windowed FFT peak with parabolic refinement; nullopt for a flat series.
std::optional<FourierPeak> fourier_peak(const std::vector<double>& series, double dt);

struct Spectrum1D {
    std::vector<double> omega; // angular
    std::vector<double> magnitude;
};

// Hann-windowed FFT magnitude of the mean-subtracted series (bins 0..n/2).
Spectrum1D fourier_spectrum(const std::vector<double>& series, double dt);

struct Envelope {
    std::vector<double> t_center;
    std::vector<double> value; // half peak-to-peak about the window mean
};

// Oscillation envelope over consecutive windows of duration `width`.
Envelope oscillation_envelope(const std::vector<double>& times, const std::vector<double>& series, double width);

} // namespace bhd
