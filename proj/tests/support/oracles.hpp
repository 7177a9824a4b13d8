// Test-side reference constructions. Nothing here calls into the library
// except for plain data types, so the checks that use them are independent routes.

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
inline const cplx I{0.0, 1.0};

inline Mat site_annihilation(int cutoff) {
    Mat a = Mat::Zero(cutoff + 1, cutoff + 1);
    for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

// index = n1 * (cutoff + 1) + n2, so mode 1 is the left Kronecker factor.
inline Mat a1(int cutoff) {
    return Eigen::kroneckerProduct(site_annihilation(cutoff), Mat::Identity(cutoff + 1, cutoff + 1)).eval();
}
inline Mat a2(int cutoff) {
    return Eigen::kroneckerProduct(Mat::Identity(cutoff + 1, cutoff + 1), site_annihilation(cutoff)).eval();
}

struct Model {
    double delta, j, u_tilde, f_tilde, gamma, n_scale;
    int kind; // 0 local, 1 nonlocal, 2 imperfect
    double delta_phi;
};

inline Mat hamiltonian(int cutoff, const Model& m) {
    const Mat b1 = a1(cutoff), b2 = a2(cutoff);
    const double u = m.u_tilde / m.n_scale;
    const double f = std::sqrt(m.n_scale) * m.f_tilde;
    Mat h = Mat::Zero(b1.rows(), b1.cols());
    for (const Mat* b : {&b1, &b2}) {
        const Mat bd = b->adjoint();
        h += -m.delta * bd * *b + u * bd * bd * *b * *b + f * (bd + *b);
    }
    h += -m.j * (b1.adjoint() * b2 + b1 * b2.adjoint());
    return h;
}

struct Jump {
    Mat l;
    double rate;
};

inline std::vector<Jump> jumps(int cutoff, const Model& m) {
    const Mat b1 = a1(cutoff), b2 = a2(cutoff);
    if (m.kind == 0) return {{b1, m.gamma}, {b2, m.gamma}};
    if (m.kind == 1) return {{b1 + b2, m.gamma}};
    // Single channel e^{i th} a1 + e^{-i th} a2 with th = dphi/2 (up to a global phase).
    const double th = 0.5 * m.delta_phi;
    return {{std::exp(I * th) * b1 + std::exp(-I * th) * b2, m.gamma}};
}

// Column-stacking Liouvillian built from Kronecker products.
inline Mat liouvillian(const Mat& h, const std::vector<Jump>& js) {
    const Eigen::Index d = h.rows();
    const Mat id = Mat::Identity(d, d);
    Mat l = -I * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
    for (const auto& j : js) {
        const Mat ldl = j.l.adjoint() * j.l;
        l += j.rate * (Eigen::kroneckerProduct(j.l.conjugate(), j.l).eval() -
                       0.5 * Eigen::kroneckerProduct(id, ldl).eval() -
                       0.5 * Eigen::kroneckerProduct(ldl.transpose(), id).eval());
    }
    return l;
}

inline Mat lindblad_rhs(const Mat& h, const std::vector<Jump>& js, const Mat& rho) {
    Mat out = -I * (h * rho - rho * h);
    for (const auto& j : js) {
        const Mat ldl = j.l.adjoint() * j.l;
        out += j.rate * (j.l * rho * j.l.adjoint() - 0.5 * (ldl * rho + rho * ldl));
    }
    return out;
}

inline Vec vec(const Mat& x) { return Eigen::Map<const Vec>(x.data(), x.size()); }
inline Mat unvec(const Vec& v, Eigen::Index d) { return Eigen::Map<const Mat>(v.data(), d, d); }

// Site-basis GP right-hand side, written straight from the rescaled equations.
inline std::pair<cplx, cplx> gp(cplx x1, cplx x2, const Model& m) {
    cplx k12, k21;
    if (m.kind == 0) {
        k12 = k21 = m.j;
    } else if (m.kind == 1) {
        k12 = k21 = m.j + I * m.gamma / 2.0;
    } else {
        k12 = m.j + I * std::exp(-I * m.delta_phi) * m.gamma / 2.0;
        k21 = m.j + I * std::exp(I * m.delta_phi) * m.gamma / 2.0;
    }
    const cplx d1 = -I * ((-m.delta - I * m.gamma / 2.0 + 2.0 * m.u_tilde * std::norm(x1)) * x1 - k12 * x2 + m.f_tilde);
    const cplx d2 = -I * ((-m.delta - I * m.gamma / 2.0 + 2.0 * m.u_tilde * std::norm(x2)) * x2 - k21 * x1 + m.f_tilde);
    return {d1, d2};
}

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 by the trigonometric / Cardano formulas.
inline std::vector<double> cubic_roots(double c3, double c2, double c1, double c0) {
    const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
    const double q = (3.0 * b - a * a) / 9.0;
    const double r = (9.0 * a * b - 27.0 * c - 2.0 * a * a * a) / 54.0;
    const double disc = q * q * q + r * r;
    std::vector<double> out;
    if (disc > 0) {
        const double s = std::cbrt(r + std::sqrt(disc));
        const double t = std::cbrt(r - std::sqrt(disc));
        out.push_back(s + t - a / 3.0);
    } else {
        const double th = std::acos(std::clamp(r / std::sqrt(-q * q * q), -1.0, 1.0));
        const double m = 2.0 * std::sqrt(-q);
        for (int k = 0; k < 3; ++k) out.push_back(m * std::cos((th + 2.0 * M_PI * k) / 3.0) - a / 3.0);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline double poisson(double mean, int n) {
    return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

// Random density matrix: G G^dag / Tr, with complex Gaussian G.
inline Mat random_density(Eigen::Index d, std::mt19937_64& rng, int rank = 0) {
    std::normal_distribution<double> g;
    const Eigen::Index k = rank > 0 ? rank : d;
    Mat m(d, k);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = {g(rng), g(rng)};
    Mat rho = m * m.adjoint();
    return rho / rho.trace();
}

} // namespace oracle
