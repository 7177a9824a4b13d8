// Thin wrappers over LAPACKE (dense) and ARPACK (shift-invert Arnoldi).

#pragma once

#include <functional>
#include <vector>

#include "bhd/hilbert.hpp"

namespace bhd::detail {

struct DenseEig {
    Vector values;
    DenseMatrix right; // columns
    DenseMatrix left;  // columns, left^H A = diag(values) left^H; empty if not requested
};

DenseEig dense_eig(DenseMatrix a, bool want_left);

struct ArnoldiResult {
    std::vector<cplx> values;
    DenseMatrix vectors;
    int op_applications{0};
};

// Eigenpairs of A nearest sigma. `solve(x, y)` must set y = (A - sigma)^{-1} x.
ArnoldiResult shift_invert_arnoldi(Index n, int nev, int ncv, cplx sigma, double tol,
                                   const std::function<void(const cplx*, cplx*)>& solve,
                                   int max_restarts = 3000);

} // namespace bhd::detail
