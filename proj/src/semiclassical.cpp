#include "bhd/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/Polynomials>

#include "bhd/analysis.hpp"
#include "bhd/errors.hpp"
#include "ode.hpp"

namespace bhd {

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Cross couplings kappa_1, kappa_2 in i d(alpha_j)/dt = ... - kappa_j alpha_other.
std::pair<cplx, cplx> cross_couplings(const ModelParams& p) {
    const double g = p.gamma;
    switch (p.dissipation.kind) {
    case DissipationKind::local: return {cplx(p.j, 0.0), cplx(p.j, 0.0)};
    case DissipationKind::nonlocal: return {cplx(p.j, 0.5 * g), cplx(p.j, 0.5 * g)};
    case DissipationKind::imperfect: {
        const double dphi = p.dissipation.delta_phi;
        return {p.j + kI * std::exp(-kI * dphi) * (0.5 * g), p.j + kI * std::exp(kI * dphi) * (0.5 * g)};
    }
    }
    throw std::invalid_argument("unknown dissipation kind");
}

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

Vec4 to_real(const SCState& s) { return {s.alpha1.real(), s.alpha1.imag(), s.alpha2.real(), s.alpha2.imag()}; }
SCState from_real(const Vec4& x) { return {cplx(x(0), x(1)), cplx(x(2), x(3))}; }

Vec4 residual_vector(const Vec4& x, const ModelParams& p) { return to_real(gp_rhs(from_real(x), p)); }

// Real Jacobian from the complex one: R = T^-1 J T with (a1, a1*, a2, a2*) = T (x1, y1, x2, y2).
Mat4 real_jacobian(const SCState& s, const ModelParams& p) {
    Eigen::Matrix4cd t = Eigen::Matrix4cd::Zero();
    t(0, 0) = 1.0; t(0, 1) = kI;
    t(1, 0) = 1.0; t(1, 1) = -kI;
    t(2, 2) = 1.0; t(2, 3) = kI;
    t(3, 2) = 1.0; t(3, 3) = -kI;
    const Eigen::Matrix4cd r = t.inverse() * jacobian(s, p).matrix * t;
    return r.real();
}

// Damped Newton on the full four-dimensional system.
bool newton(Vec4& x, const ModelParams& p, double tol, int max_iter = 100) {
    Vec4 g = residual_vector(x, p);
    for (int it = 0; it < max_iter && g.norm() > tol; ++it) {
        const Mat4 r = real_jacobian(from_real(x), p);
        const Vec4 step = r.completeOrthogonalDecomposition().solve(-g);
        if (!step.allFinite()) return false;
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 40; ++k) {
            const Vec4 trial = x + lambda * step;
            const Vec4 gt = residual_vector(trial, p);
            if (gt.norm() < g.norm() || gt.norm() <= tol) {
                x = trial;
                g = gt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) return false;
    }
    return g.norm() <= tol;
}

FixedPoint make_fixed_point(const SCState& s, const ModelParams& p) {
    const Jacobian jac = jacobian(s, p);
    FixedPoint fp{s, to_real(gp_rhs(s, p)).norm(), classify(jac.eigenvalues), jac.eigenvalues, std::norm(s.alpha1)};
    return fp;
}

double epsilon_of(const ModelParams& p) {
    if (p.dissipation.kind == DissipationKind::nonlocal) return 1.0;
    if (p.dissipation.kind == DissipationKind::local) return 0.0;
    throw std::invalid_argument("operation supports local and nonlocal dissipation only");
}

} // namespace

cplx SCState::bonding() const { return (alpha1 + alpha2) / kSqrt2; }
cplx SCState::antibonding() const { return (alpha1 - alpha2) / kSqrt2; }
SCState SCState::from_modes(cplx b, cplx a) { return {(b + a) / kSqrt2, (b - a) / kSqrt2}; }

double population_difference(const SCState& s) { return std::norm(s.alpha1) - std::norm(s.alpha2); }
double relative_phase(const SCState& s) { return relative_phase(s.alpha1, s.alpha2); }

SCState gp_rhs(const SCState& s, const ModelParams& p) {
    const auto [k1, k2] = cross_couplings(p);
    const cplx diag(-p.delta, -0.5 * p.gamma);
    const double u2 = 2.0 * p.u_tilde;
    const cplx r1 = (diag + u2 * std::norm(s.alpha1)) * s.alpha1 - k1 * s.alpha2 + p.f_tilde;
    const cplx r2 = (diag + u2 * std::norm(s.alpha2)) * s.alpha2 - k2 * s.alpha1 + p.f_tilde;
    return {-kI * r1, -kI * r2};
}

SCState gp_rhs_bonding(cplx b, cplx a, const ModelParams& p) {
    const double eps = epsilon_of(p);
    const double u = p.u_tilde;
    const cplx rb = (-p.delta - p.j - kI * (1.0 + eps) * p.gamma * 0.5 + u * std::norm(b) + 2.0 * u * std::norm(a)) * b +
                    u * a * a * std::conj(b) + kSqrt2 * p.f_tilde;
    const cplx ra = (-p.delta + p.j - kI * (1.0 - eps) * p.gamma * 0.5 + u * std::norm(a) + 2.0 * u * std::norm(b)) * a +
                    u * b * b * std::conj(a);
    return {-kI * rb, -kI * ra};
}

// ------------------------------------------------------------- integrate --

SCTrajectory integrate(const SCState& psi0, const ModelParams& params, double t_end, double sample_dt,
                       const IntegrateOptions& options) {
    params.validate();
    if (!(t_end > 0)) throw std::invalid_argument("integrate: t_end must be positive");
    if (!(sample_dt > 0)) throw std::invalid_argument("integrate: sample_dt must be positive");

    const long n = long(std::floor(t_end / sample_dt + 1e-9));
    std::vector<double> grid;
    grid.reserve(std::size_t(n) + 1);
    for (long i = 0; i <= n; ++i) grid.push_back(double(i) * sample_dt);

    auto sys = [&](const detail::RealState& x, detail::RealState& dx, double t) {
        const SCState s{cplx(x(0), x(1)), cplx(x(2), x(3))};
        if (!x.allFinite() || std::abs(s.alpha1) > options.blow_up || std::abs(s.alpha2) > options.blow_up) {
            throw NumericalError(ErrorKind::blow_up, "mean-field amplitude diverged at t = " + std::to_string(t),
                                 {{"time", t}, {"abs_alpha1", std::abs(s.alpha1)}, {"abs_alpha2", std::abs(s.alpha2)}});
        }
        const SCState d = gp_rhs(s, params);
        dx.resize(4);
        dx << d.alpha1.real(), d.alpha1.imag(), d.alpha2.real(), d.alpha2.imag();
    };

    SCTrajectory out;
    detail::RealState x(4);
    x << psi0.alpha1.real(), psi0.alpha1.imag(), psi0.alpha2.real(), psi0.alpha2.imag();
    detail::integrate_on_grid(sys, x, grid, options.rtol, options.atol, [&](std::size_t i, const detail::RealState& s) {
        if (grid[i] + 1e-12 < options.record_from) return;
        out.times.push_back(grid[i]);
        out.states.push_back({cplx(s(0), s(1)), cplx(s(2), s(3))});
    });
    return out;
}

// ------------------------------------------------------------- stability --

std::string to_string(Stability s) {
    switch (s) {
    case Stability::asymptotically_stable: return "asymptotically_stable";
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    }
    return "unknown";
}

Jacobian jacobian(const SCState& s, const ModelParams& p) {
    const auto [k1, k2] = cross_couplings(p);
    const cplx diag(-p.delta, -0.5 * p.gamma);
    const double u = p.u_tilde;
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    // f1 = -i[(diag + 2U|a1|^2) a1 - k1 a2 + F]
    const cplx d11 = -kI * (diag + 4.0 * u * std::norm(s.alpha1));
    const cplx d11c = -kI * (2.0 * u * s.alpha1 * s.alpha1);
    const cplx d22 = -kI * (diag + 4.0 * u * std::norm(s.alpha2));
    const cplx d22c = -kI * (2.0 * u * s.alpha2 * s.alpha2);
    m(0, 0) = d11;
    m(0, 1) = d11c;
    m(0, 2) = kI * k1;
    m(1, 0) = std::conj(d11c);
    m(1, 1) = std::conj(d11);
    m(1, 3) = std::conj(kI * k1);
    m(2, 2) = d22;
    m(2, 3) = d22c;
    m(2, 0) = kI * k2;
    m(3, 2) = std::conj(d22c);
    m(3, 3) = std::conj(d22);
    m(3, 1) = std::conj(kI * k2);

    Jacobian j;
    j.matrix = m;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m, false);
    for (int i = 0; i < 4; ++i) j.eigenvalues[i] = es.eigenvalues()(i);
    std::sort(j.eigenvalues.begin(), j.eigenvalues.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return j;
}

Stability classify(const std::array<cplx, 4>& ev, double tol) {
    bool any_neutral = false;
    for (const auto& w : ev) {
        if (w.real() > tol) return Stability::unstable;
        if (w.real() >= -tol) any_neutral = true;
    }
    return any_neutral ? Stability::stable : Stability::asymptotically_stable;
}

// ---------------------------------------------------------- fixed points --

std::array<double, 4> symmetric_cubic_coefficients(const ModelParams& p) {
    const double d = p.delta + p.j;
    const double g = p.dissipation.kind == DissipationKind::nonlocal ? p.gamma : 0.5 * p.gamma;
    epsilon_of(p);
    const double u = p.u_tilde;
    return {4.0 * u * u, -4.0 * u * d, d * d + g * g, -p.f_tilde * p.f_tilde};
}

std::vector<double> symmetric_cubic_roots(const ModelParams& p) {
    p.validate();
    const auto c = symmetric_cubic_coefficients(p);
    if (p.f_tilde == 0.0) return {0.0};
    std::vector<double> roots;
    if (c[0] == 0.0) {
        roots.push_back(-c[3] / c[2]);
    } else {
        Eigen::PolynomialSolver<double, 3> solver;
        Eigen::Vector4d asc(c[3], c[2], c[1], c[0]);
        solver.compute(asc);
        const auto& all = solver.roots();
        const double scale = std::max(1.0, all.cwiseAbs().maxCoeff());
        for (Index i = 0; i < all.size(); ++i) {
            if (std::abs(all(i).imag()) > 1e-7 * scale) continue;
            double n = all(i).real();
            // Newton polish on the cubic itself.
            for (int it = 0; it < 50; ++it) {
                const double f = ((c[0] * n + c[1]) * n + c[2]) * n + c[3];
                const double df = (3.0 * c[0] * n + 2.0 * c[1]) * n + c[2];
                if (df == 0.0) break;
                const double step = f / df;
                n -= step;
                if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(n))) break;
            }
            if (n > 0.0) roots.push_back(n);
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-10 * std::max(1.0, b); }),
                roots.end());
    return roots;
}

std::vector<FixedPoint> symmetric_fixed_points(const ModelParams& p) {
    const double eps = epsilon_of(p);
    const double d = p.delta + p.j;
    std::vector<FixedPoint> out;
    for (double n : symmetric_cubic_roots(p)) {
        // alpha = F / (D - 2U n + i (1 + eps) gamma / 2)
        const cplx alpha = p.f_tilde / cplx(d - 2.0 * p.u_tilde * n, 0.5 * (1.0 + eps) * p.gamma);
        Vec4 x = to_real({alpha, alpha});
        newton(x, p, 1e-13, 20);
        out.push_back(make_fixed_point(from_real(x), p));
    }
    return out;
}

std::vector<FixedPoint> asymmetric_fixed_points(const ModelParams& p, int starts, double radius, std::uint64_t seed) {
    p.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto draw = [&] {
        cplx z;
        do z = cplx(u(rng), u(rng));
        while (std::abs(z) > 1.0);
        return radius * z;
    };
    std::vector<FixedPoint> out;
    for (int s = 0; s < starts; ++s) {
        Vec4 x = to_real({draw(), draw()});
        if (!newton(x, p, 1e-11)) continue;
        const SCState st = from_real(x);
        if (std::abs(st.alpha1 - st.alpha2) < 1e-6) continue;
        bool dup = false;
        for (const auto& f : out)
            if ((to_real(f.state) - x).norm() < 1e-6) dup = true;
        if (!dup) out.push_back(make_fixed_point(st, p));
    }
    return out;
}

// ----------------------------------------------------------- limit cycles --

LimitCycleReport limit_cycle(const SCState& psi0, const ModelParams& params, const LimitCycleSettings& st) {
    if (!(st.transient_fraction >= 0.0 && st.transient_fraction < 1.0)) {
        throw std::invalid_argument("limit_cycle: transient_fraction must lie in [0, 1)");
    }
    const double t_start = st.transient_fraction * st.t_end;
    const double w_drift = std::min(st.drift_window, 0.1 * st.t_end);
    IntegrateOptions io = st.integrate;
    io.record_from = std::min(t_start, st.t_end - w_drift);
    const SCTrajectory traj = integrate(psi0, params, st.t_end, st.sample_dt, io);

    std::vector<double> z_fft;
    double lo1 = 1e300, hi1 = -1e300, lo2 = 1e300, hi2 = -1e300;
    const double mid = st.t_end - 0.5 * w_drift;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const double z = population_difference(traj.states[i]);
        if (t >= t_start) z_fft.push_back(z);
        if (t >= st.t_end - w_drift && t < mid) {
            lo1 = std::min(lo1, z);
            hi1 = std::max(hi1, z);
        } else if (t >= mid) {
            lo2 = std::min(lo2, z);
            hi2 = std::max(hi2, z);
        }
    }
    const double pp1 = hi1 - lo1, pp2 = hi2 - lo2;
    const double pp_mean = 0.5 * (pp1 + pp2);

    LimitCycleReport rep;
    rep.transient_discarded = t_start;
    rep.window_end = st.t_end;
    rep.drift = pp_mean > 0 ? std::abs(pp2 - pp1) / pp_mean : 0.0;

    double lo = 1e300, hi = -1e300;
    for (double z : z_fft) {
        lo = std::min(lo, z);
        hi = std::max(hi, z);
    }
    rep.amplitude = hi - lo;
    const auto peak = fourier_peak(z_fft, st.sample_dt);
    if (!peak || pp_mean < 1e-9) {
        throw NumericalError(ErrorKind::not_converged, "no oscillation found in the analysis window",
                             {{"amplitude", rep.amplitude}, {"t_end", st.t_end}});
    }
    if (rep.drift > st.drift_tol) {
        throw NumericalError(ErrorKind::not_converged, "limit-cycle envelope still drifting",
                             {{"drift", rep.drift}, {"drift_rate", rep.drift / (0.5 * w_drift)},
                              {"t_end", st.t_end}, {"frequency", peak->frequency}});
    }
    rep.frequency = peak->frequency;
    rep.bin_width = peak->bin_width;
    rep.raw_bin_frequency = std::round(peak->bin) * peak->bin_width;
    return rep;
}

EffectiveFrequency effective_frequency(cplx alpha_b, const ModelParams& p) {
    const double nb = std::norm(alpha_b);
    const double a = -p.delta + p.j + 2.0 * p.u_tilde * nb;
    const double b = p.u_tilde * nb;
    const double rad = a * a - b * b;
    EffectiveFrequency out;
    const double scale = std::max(1.0, a * a);
    if (std::abs(rad) <= 1e-14 * scale) {
        out.omega_plus = out.omega_minus = 0.0;
        out.degenerate = true;
    } else if (rad > 0) {
        out.omega_plus = std::sqrt(rad);
        out.omega_minus = -std::sqrt(rad);
    } else {
        out.omega_plus = kI * std::sqrt(-rad);
        out.omega_minus = -kI * std::sqrt(-rad);
        out.imaginary = true;
    }
    return out;
}

} // namespace bhd
