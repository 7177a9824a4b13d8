#include "eigen_backend.hpp"

#include <lapacke.h>
#include <arpack/arpack.hpp>

#include <algorithm>
#include <string>

#include "bhd/errors.hpp"

namespace bhd::detail {

DenseEig dense_eig(DenseMatrix a, bool want_left) {
    const lapack_int n = lapack_int(a.rows());
    DenseEig out;
    out.values.resize(n);
    out.right.resize(n, n);
    if (want_left) out.left.resize(n, n);
    if (n == 0) return out;

    auto* pa = reinterpret_cast<lapack_complex_double*>(a.data());
    auto* pw = reinterpret_cast<lapack_complex_double*>(out.values.data());
    auto* pr = reinterpret_cast<lapack_complex_double*>(out.right.data());
    auto* pl = want_left ? reinterpret_cast<lapack_complex_double*>(out.left.data()) : nullptr;
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, want_left ? 'V' : 'N', 'V', n, pa, n, pw,
                                          pl, want_left ? n : 1, pr, n);
    if (info != 0) {
        throw NumericalError(ErrorKind::not_converged, "zgeev failed with info " + std::to_string(info),
                             {{"info", double(info)}, {"dim", double(n)}});
    }
    return out;
}

ArnoldiResult shift_invert_arnoldi(Index n_, int nev, int ncv, cplx sigma, double tol,
                                   const std::function<void(const cplx*, cplx*)>& solve,
                                   int max_restarts) {
    const a_int n = a_int(n_);
    if (nev < 1 || nev >= n - 1) {
        throw std::invalid_argument("shift_invert_arnoldi: need 1 <= nev < n-1");
    }
    ncv = std::clamp(ncv, nev + 2, int(n));

    a_int ido = 0;
    a_int info = 0;
    std::vector<cplx> resid(n);
    std::vector<cplx> v(std::size_t(n) * ncv);
    std::vector<cplx> workd(3 * std::size_t(n));
    const a_int lworkl = 3 * ncv * ncv + 5 * ncv;
    std::vector<cplx> workl(lworkl);
    std::vector<double> rwork(ncv);
    a_int iparam[11] = {};
    a_int ipntr[14] = {};
    iparam[0] = 1;
    iparam[2] = max_restarts;
    iparam[3] = 1;
    iparam[6] = 3;

    ArnoldiResult out;
    while (true) {
        arpack::naupd(ido, arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, tol,
                      resid.data(), ncv, v.data(), n, iparam, ipntr, workd.data(), workl.data(),
                      lworkl, rwork.data(), info);
        if (ido == -1 || ido == 1) {
            solve(&workd[ipntr[0] - 1], &workd[ipntr[1] - 1]);
            ++out.op_applications;
        } else {
            break;
        }
    }
    if (info < 0 || info == 1) {
        throw NumericalError(ErrorKind::not_converged, "znaupd failed with info " + std::to_string(info),
                             {{"info", double(info)}, {"converged", double(iparam[4])},
                              {"restarts", double(iparam[2])}, {"dim", double(n)}});
    }

    std::vector<a_int> select(ncv, 0);
    std::vector<cplx> d(nev + 1);
    std::vector<cplx> z(std::size_t(n) * nev);
    std::vector<cplx> workev(2 * ncv);
    arpack::neupd(1, arpack::howmny::ritz_vectors, select.data(), d.data(), z.data(), n, sigma,
                  workev.data(), arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, tol,
                  resid.data(), ncv, v.data(), n, iparam, ipntr, workd.data(), workl.data(), lworkl,
                  rwork.data(), info);
    if (info != 0) {
        throw NumericalError(ErrorKind::not_converged, "zneupd failed with info " + std::to_string(info),
                             {{"info", double(info)}, {"dim", double(n)}});
    }
    const int nconv = int(iparam[4]);
    out.values.assign(d.begin(), d.begin() + nconv);
    out.vectors = Eigen::Map<DenseMatrix>(z.data(), n, nev).leftCols(nconv);
    return out;
}

} // namespace bhd::detail
