#include "bhd/analysis.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace bhd {

std::vector<Observable> standard_observables(const FockSpace& space, double n_scale) {
    const SparseMatrix n1 = number(space, Mode::one).matrix;
    const SparseMatrix n2 = number(space, Mode::two).matrix;
    std::vector<Observable> out;
    out.push_back({"n_tot", SparseMatrix((n1 + n2) / n_scale)});
    out.push_back({"z", SparseMatrix((n1 - n2) / n_scale)});
    out.push_back({"z2", swap_operator(space).matrix});
    out.push_back({"a_b", annihilation(space, Mode::bonding).matrix});
    out.push_back({"a_a", annihilation(space, Mode::antibonding).matrix});
    out.push_back({"a1", annihilation(space, Mode::one).matrix});
    out.push_back({"a2", annihilation(space, Mode::two).matrix});
    return out;
}

cplx expectation(const DenseMatrix& rho, const SparseMatrix& o) {
    if (rho.rows() != o.rows() || rho.cols() != o.cols()) {
        throw std::invalid_argument("expectation: dimension mismatch");
    }
    // Tr[O rho] = sum_ij O_ij rho_ji
    cplx acc = 0.0;
    for (Index k = 0; k < o.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(o, k); it; ++it) acc += it.value() * rho(it.col(), it.row());
    return acc;
}

cplx expectation(const Vector& psi, const SparseMatrix& o) {
    if (psi.size() != o.rows()) throw std::invalid_argument("expectation: dimension mismatch");
    const double nn = psi.squaredNorm();
    if (nn == 0.0) throw std::invalid_argument("expectation: zero state");
    return psi.dot(o * psi) / nn;
}

cplx expectation(const DenseMatrix& rho, const Operator& o) { return expectation(rho, o.matrix); }

cplx expectation(const StateVector& psi, const Operator& o) {
    if (!(psi.space == o.space)) throw std::invalid_argument("expectation: space mismatch");
    return expectation(psi.amplitudes, o.matrix);
}

double relative_phase(cplx a1, cplx a2) {
    double d = std::arg(a1) - std::arg(a2);
    constexpr double pi = std::numbers::pi;
    while (d <= -pi) d += 2 * pi;
    while (d > pi) d -= 2 * pi;
    return d;
}

namespace {

// Magnitudes of the Hann-windowed, mean-subtracted series normalized by `scale`.
std::vector<double> windowed_magnitudes(const std::vector<double>& series, double mean, double scale) {
    const std::size_t n = series.size();
    constexpr double pi = std::numbers::pi;
    // FFTW planning is not thread-safe.
    static std::mutex planner;
    std::unique_lock lock(planner);
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(int(n), in, out, FFTW_ESTIMATE);
    lock.unlock();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2 * pi * double(i) / double(n - 1));
        in[i] = (series[i] - mean) / scale * w;
    }
    fftw_execute(plan);
    std::vector<double> mag(n / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
    lock.lock();
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    return mag;
}

std::pair<double, double> mean_and_scale(const std::vector<double>& series) {
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= double(series.size());
    double scale = 0.0;
    for (double v : series) scale = std::max(scale, std::abs(v - mean));
    return {mean, scale};
}

void check_series(const std::vector<double>& series, double dt) {
    if (series.size() < 64) throw std::invalid_argument("fourier analysis needs at least 64 samples");
    if (!(dt > 0)) throw std::invalid_argument("fourier analysis: dt must be positive");
}

} // namespace

Spectrum1D fourier_spectrum(const std::vector<double>& series, double dt) {
    check_series(series, dt);
    const auto [mean, scale] = mean_and_scale(series);
    Spectrum1D out;
    const std::size_t n = series.size();
    const double width = 2 * std::numbers::pi / (double(n) * dt);
    std::vector<double> mag = scale > 0 ? windowed_magnitudes(series, mean, scale) : std::vector<double>(n / 2 + 1, 0.0);
    for (std::size_t k = 0; k < mag.size(); ++k) {
        out.omega.push_back(double(k) * width);
        out.magnitude.push_back(mag[k] * scale);
    }
    return out;
}

std::optional<FourierPeak> fourier_peak(const std::vector<double>& series, double dt) {
    check_series(series, dt);
    const std::size_t n = series.size();
    const auto [mean, scale] = mean_and_scale(series);
    if (scale <= 1e-14 * std::max(1.0, std::abs(mean))) return std::nullopt;
    const std::vector<double> mag = windowed_magnitudes(series, mean, scale);

    std::size_t best = 1;
    for (std::size_t k = 1; k + 1 < mag.size(); ++k)
        if (mag[k] > mag[best]) best = k;
    double shift = 0.0;
    const double a = mag[best - 1], b = mag[best], c = mag[best + 1];
    const double den = a - 2 * b + c;
    if (den < 0) shift = 0.5 * (a - c) / den;
    const double width = 2 * std::numbers::pi / (double(n) * dt);
    const double bin = double(best) + shift;
    const double peak = b - 0.25 * (a - c) * shift;
    return FourierPeak{bin * width, peak * scale, bin, width};
}

Envelope oscillation_envelope(const std::vector<double>& times, const std::vector<double>& series, double width) {
    if (times.size() != series.size()) throw std::invalid_argument("oscillation_envelope: size mismatch");
    if (!(width > 0)) throw std::invalid_argument("oscillation_envelope: width must be positive");
    Envelope env;
    std::size_t start = 0;
    while (start < times.size()) {
        std::size_t end = start;
        while (end < times.size() && times[end] < times[start] + width) ++end;
        if (end == times.size() && times.back() - times[start] < 0.999 * width && !env.value.empty()) break;
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = start; i < end; ++i) {
            lo = std::min(lo, series[i]);
            hi = std::max(hi, series[i]);
        }
        env.t_center.push_back(0.5 * (times[start] + times[end - 1]));
        env.value.push_back(0.5 * (hi - lo));
        start = end;
    }
    return env;
}

} // namespace bhd
