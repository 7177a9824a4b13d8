#include "bhd/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bhd {

namespace {

using Triplet = Eigen::Triplet<cplx>;

SparseMatrix from_triplets(Index dim, const std::vector<Triplet>& t) {
    SparseMatrix m(dim, dim);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

void require_same_space(const Operator& a, const Operator& b) {
    if (!(a.space == b.space)) {
        throw std::invalid_argument("operator spaces differ");
    }
}

// Single-mode truncated coherent amplitudes <n|alpha> for n = 0..cutoff.
Vector coherent_amplitudes(int cutoff, cplx alpha) {
    Vector c(cutoff + 1);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= cutoff; ++n) {
        c(n) = c(n - 1) * alpha / std::sqrt(double(n));
    }
    return c;
}

} // namespace

// --------------------------------- FockSpace --------------------------------

FockSpace::FockSpace(int cutoff_per_site) : cutoff_(cutoff_per_site) {
    if (cutoff_per_site < 1) {
        throw std::invalid_argument("FockSpace: cutoff_per_site must be >= 1, got " +
                                    std::to_string(cutoff_per_site));
    }
}

Index FockSpace::index(int n1, int n2) const {
    if (n1 < 0 || n2 < 0 || n1 > cutoff_ || n2 > cutoff_) {
        throw std::out_of_range("FockSpace::index: occupation outside truncation");
    }
    return Index(n1) * dim_site() + n2;
}

std::pair<int, int> FockSpace::labels(Index i) const {
    if (i < 0 || i >= dim()) {
        throw std::out_of_range("FockSpace::labels: index outside space");
    }
    return {int(i / dim_site()), int(i % dim_site())};
}

FockSpace build_space(int cutoff_per_site) { return FockSpace(cutoff_per_site); }

// --------------------------------- Operator ---------------------------------

Operator::Operator(FockSpace s, SparseMatrix m, Flag herm, Flag unit)
    : space(s), matrix(std::move(m)), hermitian(herm), unitary(unit) {
    if (matrix.rows() != space.dim() || matrix.cols() != space.dim()) {
        throw std::invalid_argument("Operator: matrix dimension does not match FockSpace");
    }
    matrix.makeCompressed();
}

Operator Operator::adjoint() const {
    return Operator(space, SparseMatrix(matrix.adjoint()), hermitian, unitary);
}

double Operator::hermiticity_defect() const {
    return max_abs(SparseMatrix(matrix - SparseMatrix(matrix.adjoint())));
}

Operator operator+(const Operator& a, const Operator& b) {
    require_same_space(a, b);
    const Flag h = (a.hermitian == Flag::yes && b.hermitian == Flag::yes) ? Flag::yes : Flag::unknown;
    return Operator(a.space, a.matrix + b.matrix, h);
}

Operator operator-(const Operator& a, const Operator& b) {
    require_same_space(a, b);
    const Flag h = (a.hermitian == Flag::yes && b.hermitian == Flag::yes) ? Flag::yes : Flag::unknown;
    return Operator(a.space, a.matrix - b.matrix, h);
}

Operator operator*(const Operator& a, const Operator& b) {
    require_same_space(a, b);
    const Flag u = (a.unitary == Flag::yes && b.unitary == Flag::yes) ? Flag::yes : Flag::unknown;
    return Operator(a.space, SparseMatrix(a.matrix * b.matrix), Flag::unknown, u);
}

Operator operator*(cplx s, const Operator& a) {
    const Flag h = (a.hermitian == Flag::yes && s.imag() == 0.0) ? Flag::yes : Flag::unknown;
    return Operator(a.space, SparseMatrix(s * a.matrix), h);
}

SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b) {
    return SparseMatrix(a * b) - SparseMatrix(b * a);
}

double max_abs(const SparseMatrix& m) {
    double best = 0.0;
    for (Index k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            best = std::max(best, std::abs(it.value()));
        }
    }
    return best;
}

// ------------------------------ Constructors --------------------------------

Operator identity(const FockSpace& space) {
    SparseMatrix m(space.dim(), space.dim());
    m.setIdentity();
    return Operator(space, m, Flag::yes, Flag::yes);
}

Operator annihilation(const FockSpace& space, Mode mode) {
    const int c = space.cutoff();
    std::vector<Triplet> t;
    switch (mode) {
    case Mode::one:
        for (int n1 = 1; n1 <= c; ++n1)
            for (int n2 = 0; n2 <= c; ++n2)
                t.emplace_back(space.index(n1 - 1, n2), space.index(n1, n2), std::sqrt(double(n1)));
        return Operator(space, from_triplets(space.dim(), t), Flag::no, Flag::no);
    case Mode::two:
        for (int n1 = 0; n1 <= c; ++n1)
            for (int n2 = 1; n2 <= c; ++n2)
                t.emplace_back(space.index(n1, n2 - 1), space.index(n1, n2), std::sqrt(double(n2)));
        return Operator(space, from_triplets(space.dim(), t), Flag::no, Flag::no);
    case Mode::bonding:
    case Mode::antibonding: {
        const double sign = mode == Mode::bonding ? 1.0 : -1.0;
        SparseMatrix m = (annihilation(space, Mode::one).matrix +
                          sign * annihilation(space, Mode::two).matrix) /
                         std::sqrt(2.0);
        return Operator(space, m, Flag::no, Flag::no);
    }
    }
    throw std::invalid_argument("annihilation: unknown mode");
}

Operator creation(const FockSpace& space, Mode mode) { return annihilation(space, mode).adjoint(); }

Operator number(const FockSpace& space, Mode mode) {
    const Operator a = annihilation(space, mode);
    return Operator(space, SparseMatrix(a.matrix.adjoint() * a.matrix), Flag::yes);
}

Operator total_number(const FockSpace& space) {
    std::vector<Triplet> t;
    for (Index i = 0; i < space.dim(); ++i) {
        const auto [n1, n2] = space.labels(i);
        t.emplace_back(i, i, double(n1 + n2));
    }
    return Operator(space, from_triplets(space.dim(), t), Flag::yes);
}

Operator swap_operator(const FockSpace& space) {
    std::vector<Triplet> t;
    for (Index i = 0; i < space.dim(); ++i) {
        const auto [n1, n2] = space.labels(i);
        t.emplace_back(space.index(n2, n1), i, 1.0);
    }
    return Operator(space, from_triplets(space.dim(), t), Flag::yes, Flag::yes);
}

StateVector basis_state(const FockSpace& space, int n1, int n2) {
    Vector v = Vector::Zero(space.dim());
    v(space.index(n1, n2)) = 1.0;
    return StateVector{space, v};
}

StateVector coherent_state(const FockSpace& space, cplx alpha1, cplx alpha2) {
    const int c = space.cutoff();
    const Vector c1 = coherent_amplitudes(c, alpha1);
    const Vector c2 = coherent_amplitudes(c, alpha2);
    Vector v(space.dim());
    for (int n1 = 0; n1 <= c; ++n1)
        for (int n2 = 0; n2 <= c; ++n2)
            v(space.index(n1, n2)) = c1(n1) * c2(n2);

    StateVector s{space, v};
    const double norm = v.norm();
    s.truncation_deficit = 1.0 - norm * norm;
    s.amplitudes /= norm;
    s.cutoff_warning = std::max(std::norm(alpha1), std::norm(alpha2)) > 0.5 * c;
    return s;
}

DenseMatrix reduced_density(const FockSpace& space, const DenseMatrix& rho, Mode mode) {
    if (rho.rows() != space.dim() || rho.cols() != space.dim()) {
        throw std::invalid_argument("reduced_density: dimension mismatch");
    }
    const int d = space.dim_site();
    DenseMatrix red = DenseMatrix::Zero(d, d);
    if (mode == Mode::one) {
        // Contiguous d x d blocks, summed along their diagonals.
        for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n)
                red(m, n) = rho.block(Index(m) * d, Index(n) * d, d, d).trace();
    } else if (mode == Mode::two) {
        for (int k = 0; k < d; ++k)
            red += rho.block(Index(k) * d, Index(k) * d, d, d);
    } else {
        throw std::invalid_argument("reduced_density: mode must be one or two");
    }
    return red;
}

} // namespace bhd
