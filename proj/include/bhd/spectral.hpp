// Vectorized Lindblad generator, low-lying spectrum and steady states.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bhd/hilbert.hpp"
#include "bhd/model.hpp"

namespace bhd {

inline constexpr Index kSparseSuperCap = 250000; // vectorize: max D for sparse assembly
inline constexpr Index kDenseCap = 4096;         // spectrum(dense): max D

// Column stacking: vec(A X B) = (B^T kron A) vec(X).
struct Superoperator {
    FockSpace space;
    ModelParams params;
    Operator h;
    DissipatorSpec diss;

    SparseMatrix matrix; // empty for a matrix-free generator

    Index dim() const { return space.dim() * space.dim(); }
    bool assembled() const { return matrix.size() > 0; }
};

Superoperator vectorize(const FockSpace& space, const ModelParams& params,
                        Index max_dim = kSparseSuperCap);

// Same model without assembling the sparse matrix; enough for shift-invert spectra.
Superoperator generator(const FockSpace& space, const ModelParams& params);

Vector vec(const DenseMatrix& x);
DenseMatrix unvec(const Vector& v, Index dim);

// Direct (unvectorized) actions of L and of its dual L*.
DenseMatrix apply_liouvillian(const Operator& h, const DissipatorSpec& diss, const DenseMatrix& rho);
DenseMatrix apply_dual(const Operator& h, const DissipatorSpec& diss, const DenseMatrix& o);

// ||L*(O)||_F / ||O||_F.
double dual_residual(const FockSpace& space, const ModelParams& params, const Operator& o);

// ---------------------------------------------------------------- spectrum --

enum class Strategy { dense, shift_invert };

struct SpectrumOptions {
    Strategy strategy{Strategy::dense};
    bool want_left{true};
    bool use_symmetry{true};  // block-reduce by swap parity when the model allows it
    double shift{0.05};       // real shift sigma for shift-invert, units of gamma
    double arpack_tol{1e-12};
    double inner_tol{1e-12};
    int inner_max_iter{2000};
    int ncv{0};               // 0: automatic
    Index dense_cap{kDenseCap};
};

struct SpectralDecomposition {
    std::vector<cplx> eigenvalues;
    std::vector<DenseMatrix> right;
    std::vector<DenseMatrix> left;   // empty when not requested
    std::vector<int> cluster;        // cluster index per eigenvalue
    std::vector<int> degeneracy;     // label d within its cluster
    std::vector<std::string> sector; // "++", "--", "+-", "-+" or "full"
    std::vector<double> residuals;   // ||L r - lambda r|| / ||r||
    double cluster_tolerance{0.0};
    double zero_tolerance{0.0};
    Index space_dim{0};

    std::size_t size() const { return eigenvalues.size(); }
    int zero_degeneracy() const;
    bool has_left() const { return !left.empty(); }
};

// The k eigenvalues of largest real part (shift-invert returns the k closest to
// the shift, then ranks them by real part).
SpectralDecomposition spectrum(const Superoperator& l, int k, const SpectrumOptions& options = {});

// Sort and cluster an unsorted eigen-list in place (exposed for testing).
void sort_and_cluster(SpectralDecomposition& dec);

std::vector<cplx> gaps(const SpectralDecomposition& dec, int m);

struct SteadyStateSet {
    DenseMatrix r01;
    std::optional<DenseMatrix> r02;
    SparseMatrix z2;
    double min_eigenvalue{0.0};

    // r01 + Tr[Z2 rho0] r02.
    DenseMatrix reconstruct(const DenseMatrix& rho0) const;
};

SteadyStateSet steady_states(const SpectralDecomposition& dec, const Operator& z2);

// Steady state(s) via a spectrum call sized for the zero cluster.
SteadyStateSet compute_steady_states(const FockSpace& space, const ModelParams& params,
                                     SpectrumOptions options = {});

} // namespace bhd
