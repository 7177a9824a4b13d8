// Two-mode truncated Fock space and the operators acting on it.

#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bhd {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

// Tri-state metadata flag (hermitian / unitary).
enum class Flag { unknown, yes, no };

// Mode selector. bonding = (a1 + a2)/sqrt2, antibonding = (a1 - a2)/sqrt2.
enum class Mode { one, two, bonding, antibonding };

// --------------------------------- FockSpace --------------------------------

// Product space of two bosonic modes, each truncated at `cutoff` quanta.
// Basis ordering: index = n1 * dim_site + n2.
class FockSpace {
public:
    explicit FockSpace(int cutoff_per_site);

    int cutoff() const noexcept { return cutoff_; }
    int dim_site() const noexcept { return cutoff_ + 1; }
    Index dim() const noexcept { return Index(dim_site()) * dim_site(); }

    Index index(int n1, int n2) const;
    std::pair<int, int> labels(Index i) const;

    bool operator==(const FockSpace&) const = default;

private:
    int cutoff_;
};

FockSpace build_space(int cutoff_per_site);

// --------------------------------- Operator ---------------------------------

struct Operator {
    FockSpace space;
    SparseMatrix matrix;
    Flag hermitian{Flag::unknown};
    Flag unitary{Flag::unknown};

    Operator(FockSpace s, SparseMatrix m, Flag herm = Flag::unknown, Flag unit = Flag::unknown);

    DenseMatrix dense() const { return DenseMatrix(matrix); }
    Operator adjoint() const;

    // Largest element of |A - A^dagger|.
    double hermiticity_defect() const;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(cplx s, const Operator& a);

// Commutator [a, b] as a plain sparse matrix.
SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b);

// Largest absolute entry of a sparse matrix (0 for an empty one).
double max_abs(const SparseMatrix& m);

// -------------------------------- StateVector -------------------------------

struct StateVector {
    FockSpace space;
    Vector amplitudes;
    // 1 - (norm before renormalization)^2, for truncated coherent states.
    double truncation_deficit{0.0};
    // Set when |alpha|^2 exceeds half the cutoff in some mode.
    bool cutoff_warning{false};

    double norm() const { return amplitudes.norm(); }
};

// ------------------------------ Constructors --------------------------------

Operator identity(const FockSpace& space);
Operator annihilation(const FockSpace& space, Mode mode);
Operator creation(const FockSpace& space, Mode mode);
Operator number(const FockSpace& space, Mode mode);
Operator total_number(const FockSpace& space);

// Z2 = sum |n1,n2><n2,n1|.
Operator swap_operator(const FockSpace& space);

StateVector basis_state(const FockSpace& space, int n1, int n2);

// Truncated product coherent state |alpha1> (x) |alpha2>, renormalized.
StateVector coherent_state(const FockSpace& space, cplx alpha1, cplx alpha2);

// Partial trace of a two-mode density matrix onto `mode` (one or two).
DenseMatrix reduced_density(const FockSpace& space, const DenseMatrix& rho, Mode mode);

} // namespace bhd
