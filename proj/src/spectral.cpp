#include "bhd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <unsupported/Eigen/IterativeSolvers>
#include <unsupported/Eigen/KroneckerProduct>

#include "bhd/errors.hpp"
#include "eigen_backend.hpp"

namespace bhd {

namespace {

using Triplet = Eigen::Triplet<cplx>;

SparseMatrix sparse_identity(Index n) {
    SparseMatrix m(n, n);
    m.setIdentity();
    return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    SparseMatrix out = Eigen::kroneckerProduct(a, b).eval();
    out.makeCompressed();
    return out;
}

// ---- swap-parity structure ----

enum class Symmetry { none, weak, strong };

Symmetry detect_symmetry(const Operator& h, const DissipatorSpec& diss, const Operator& z) {
    const double scale = std::max(1.0, max_abs(h.matrix));
    if (max_abs(commutator(h.matrix, z.matrix)) > 1e-12 * scale) return Symmetry::none;
    bool strong = true;
    for (const auto& j : diss.jumps) {
        if (max_abs(commutator(j.op.matrix, z.matrix)) > 1e-12 * std::max(1.0, max_abs(j.op.matrix))) {
            strong = false;
        }
    }
    if (strong) return Symmetry::strong;
    // Weak: the dissipator as a whole is invariant under rho -> Z rho Z.
    const Index d = h.space.dim();
    DenseMatrix probe = DenseMatrix::Random(d, d);
    probe = (probe + probe.adjoint()).eval();
    const DenseMatrix zd = z.dense();
    DissipatorSpec only_diss = diss;
    const Operator zero(h.space, SparseMatrix(d, d), Flag::yes);
    const DenseMatrix lhs = zd * apply_liouvillian(zero, only_diss, zd * probe * zd) * zd;
    const DenseMatrix rhs = apply_liouvillian(zero, only_diss, probe);
    return (lhs - rhs).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff())
               ? Symmetry::weak
               : Symmetry::none;
}

// Orthonormal basis (columns) of the swap-even (sign=+1) or swap-odd (-1) subspace.
SparseMatrix parity_basis(const FockSpace& space, int sign) {
    std::vector<Triplet> t;
    const double r = 1.0 / std::sqrt(2.0);
    Index col = 0;
    for (int n1 = 0; n1 <= space.cutoff(); ++n1) {
        for (int n2 = n1; n2 <= space.cutoff(); ++n2) {
            if (n1 == n2) {
                if (sign > 0) t.emplace_back(space.index(n1, n2), col++, 1.0);
            } else {
                t.emplace_back(space.index(n1, n2), col, r);
                t.emplace_back(space.index(n2, n1), col, sign * r);
                ++col;
            }
        }
    }
    SparseMatrix p(space.dim(), col);
    p.setFromTriplets(t.begin(), t.end());
    p.makeCompressed();
    return p;
}

struct Block {
    std::string name;
    SparseMatrix ps; // row space basis
    SparseMatrix pt; // column space basis
};

// op(X) = m1 X + X m2 + sum rate * b X c on a rows x cols block.
struct BlockGenerator {
    DenseMatrix m1;
    DenseMatrix m2;
    struct Term {
        double rate;
        SparseMatrix b;
        SparseMatrix c;
    };
    std::vector<Term> terms;

    Index rows() const { return m1.rows(); }
    Index cols() const { return m2.rows(); }

    DenseMatrix apply(const DenseMatrix& x) const {
        DenseMatrix y = m1 * x;
        y.noalias() += x * m2;
        for (const auto& t : terms) {
            const DenseMatrix bx = t.b * x;
            y.noalias() += t.rate * (bx * t.c);
        }
        return y;
    }

    // Dense matrix of the block superoperator in column-stacking form.
    DenseMatrix assemble() const {
        const Index r = rows(), c = cols();
        DenseMatrix out = Eigen::kroneckerProduct(DenseMatrix::Identity(c, c), m1);
        out += Eigen::kroneckerProduct(DenseMatrix(m2.transpose()), DenseMatrix::Identity(r, r));
        for (const auto& t : terms) {
            out += t.rate * Eigen::kroneckerProduct(DenseMatrix(t.c.transpose()), DenseMatrix(t.b));
        }
        return out;
    }
};

BlockGenerator make_block(const Operator& h, const DissipatorSpec& diss, const Block& blk, bool dual) {
    const SparseMatrix heff = effective_hamiltonian(h, diss);
    const SparseMatrix a = SparseMatrix(-kI * heff);
    const SparseMatrix ad = a.adjoint();
    const SparseMatrix psd = blk.ps.adjoint();
    const SparseMatrix ptd = blk.pt.adjoint();
    BlockGenerator g;
    g.m1 = DenseMatrix(psd * (dual ? ad : a) * blk.ps);
    g.m2 = DenseMatrix(ptd * (dual ? a : ad) * blk.pt);
    for (const auto& j : diss.jumps) {
        const SparseMatrix& l = j.op.matrix;
        const SparseMatrix ld = l.adjoint();
        BlockGenerator::Term term{j.rate, SparseMatrix(psd * (dual ? ld : l) * blk.ps),
                                  SparseMatrix(ptd * (dual ? l : ld) * blk.pt)};
        g.terms.push_back(std::move(term));
    }
    return g;
}

// Exact inverse of (X -> m1 X + X m2 - sigma X) via Schur forms.
class SylvesterPreconditioner {
public:
    SylvesterPreconditioner() = default;
    SylvesterPreconditioner(const DenseMatrix& m1, const DenseMatrix& m2, cplx sigma) : sigma_(sigma) {
        Eigen::ComplexSchur<DenseMatrix> s1(m1), s2(m2);
        t1_ = s1.matrixT();
        u1_ = s1.matrixU();
        t2_ = s2.matrixT();
        u2_ = s2.matrixU();
    }

    DenseMatrix solve_block(const DenseMatrix& c) const {
        const Index r = t1_.rows(), n = t2_.rows();
        DenseMatrix y = u1_.adjoint() * c * u2_;
        for (Index j = 0; j < n; ++j) {
            if (j > 0) y.col(j).noalias() -= y.leftCols(j) * t2_.col(j).head(j);
            const cplx shift = t2_(j, j) - sigma_;
            // Column-oriented back substitution with the shifted upper-triangular t1.
            for (Index i = r - 1; i >= 0; --i) {
                y(i, j) /= t1_(i, i) + shift;
                if (i > 0) y.col(j).head(i).noalias() -= y(i, j) * t1_.col(i).head(i);
            }
        }
        return u1_ * y * u2_.adjoint();
    }

private:
    cplx sigma_{0.0};
    DenseMatrix t1_, u1_, t2_, u2_;
};

// Adapters for Eigen's iterative solver kernels.
struct ShiftedOperator {
    const BlockGenerator* g;
    cplx sigma;
    Index rows() const { return g->rows() * g->cols(); }
    Index cols() const { return rows(); }
};

Vector operator*(const ShiftedOperator& op, const Vector& x) {
    const Eigen::Map<const DenseMatrix> xm(x.data(), op.g->rows(), op.g->cols());
    DenseMatrix y = op.g->apply(xm);
    y -= op.sigma * xm;
    return Eigen::Map<const Vector>(y.data(), y.size());
}

struct PreconditionerAdapter {
    const SylvesterPreconditioner* p;
    Index rows;
    Index cols;
    Vector solve(const Vector& x) const {
        const Eigen::Map<const DenseMatrix> xm(x.data(), rows, cols);
        DenseMatrix y = p->solve_block(xm);
        return Eigen::Map<const Vector>(y.data(), y.size());
    }
};

struct BlockSpectrum {
    std::vector<cplx> values;
    std::vector<DenseMatrix> right; // block coordinates
    std::vector<DenseMatrix> left;
};

// Biorthonormalize left against right inside groups of near-equal eigenvalues.
void biorthonormalize(BlockSpectrum& bs, double tol) {
    const std::size_t n = bs.values.size();
    std::vector<bool> done(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (done[i]) continue;
        std::vector<std::size_t> group;
        for (std::size_t j = i; j < n; ++j) {
            if (!done[j] && std::abs(bs.values[j] - bs.values[i]) < tol) {
                group.push_back(j);
                done[j] = true;
            }
        }
        const Index g = Index(group.size());
        DenseMatrix m(g, g);
        for (Index a = 0; a < g; ++a)
            for (Index b = 0; b < g; ++b)
                m(a, b) = (bs.left[group[a]].conjugate().cwiseProduct(bs.right[group[b]])).sum();
        // New left set L' = L M^{-H} so that L'^H R = 1.
        const DenseMatrix minv_h = m.inverse().adjoint();
        std::vector<DenseMatrix> updated(g);
        for (Index b = 0; b < g; ++b) {
            updated[b] = DenseMatrix::Zero(bs.left[group[0]].rows(), bs.left[group[0]].cols());
            for (Index a = 0; a < g; ++a) updated[b] += minv_h(a, b) * bs.left[group[a]];
        }
        for (Index b = 0; b < g; ++b) bs.left[group[b]] = updated[b];
    }
}

BlockSpectrum dense_block(const BlockGenerator& g, bool want_left, double tol) {
    const auto eig = detail::dense_eig(g.assemble(), want_left);
    BlockSpectrum bs;
    const Index r = g.rows(), c = g.cols();
    for (Index i = 0; i < eig.values.size(); ++i) {
        bs.values.push_back(eig.values(i));
        bs.right.push_back(Eigen::Map<const DenseMatrix>(eig.right.col(i).data(), r, c));
        if (want_left) bs.left.push_back(Eigen::Map<const DenseMatrix>(eig.left.col(i).data(), r, c));
    }
    if (want_left) biorthonormalize(bs, tol);
    return bs;
}

BlockSpectrum arnoldi_block(const BlockGenerator& g, int nev, cplx sigma, const SpectrumOptions& opt) {
    const Index r = g.rows(), c = g.cols();
    const Index n = r * c;
    const SylvesterPreconditioner pre(g.m1, g.m2, sigma);
    const ShiftedOperator op{&g, sigma};
    const PreconditionerAdapter adapter{&pre, r, c};

    double worst = 0.0;
    auto solve = [&](const cplx* in, cplx* out) {
        const Eigen::Map<const Vector> b(in, n);
        Vector x = adapter.solve(b);
        Index iters = opt.inner_max_iter;
        double err = opt.inner_tol;
        Eigen::internal::bicgstab(op, b, x, adapter, iters, err);
        if (!(err <= 10 * opt.inner_tol)) {
            Index it2 = opt.inner_max_iter;
            double err2 = opt.inner_tol;
            const Index restart = 60;
            Eigen::internal::gmres(op, b, x, adapter, it2, restart, err2);
            const double true_err = (b - op * x).norm() / b.norm();
            if (!(true_err <= 1e3 * opt.inner_tol)) {
                throw NumericalError(ErrorKind::not_converged, "inner linear solve did not converge",
                                     {{"bicgstab_residual", err}, {"gmres_residual", true_err},
                                      {"block_dim", double(n)}});
            }
            err = true_err;
        }
        worst = std::max(worst, err);
        Eigen::Map<Vector>(out, n) = x;
    };

    const int ncv = opt.ncv > 0 ? opt.ncv : std::max(2 * nev + 1, 24);
    const auto res = detail::shift_invert_arnoldi(n, nev, ncv, sigma, opt.arpack_tol, solve);
    BlockSpectrum bs;
    for (std::size_t i = 0; i < res.values.size(); ++i) {
        bs.values.push_back(res.values[i]);
        bs.right.push_back(Eigen::Map<const DenseMatrix>(res.vectors.col(Index(i)).data(), r, c));
    }
    return bs;
}

// Left eigenvectors from the dual block: L* l = conj(lambda) l.
void attach_left(BlockSpectrum& bs, const BlockGenerator& dual, cplx sigma, const SpectrumOptions& opt,
                 double tol, bool dense) {
    BlockSpectrum ds = dense ? dense_block(dual, false, tol)
                             : arnoldi_block(dual, int(bs.values.size()), std::conj(sigma), opt);
    bs.left.assign(bs.values.size(), DenseMatrix());
    std::vector<bool> used(ds.values.size(), false);
    for (std::size_t i = 0; i < bs.values.size(); ++i) {
        std::size_t best = ds.values.size();
        double best_d = 1e300;
        for (std::size_t j = 0; j < ds.values.size(); ++j) {
            const double d = std::abs(std::conj(ds.values[j]) - bs.values[i]);
            if (!used[j] && d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best == ds.values.size() || best_d > std::max(1e3 * tol, 1e-6)) {
            throw NumericalError(ErrorKind::not_converged, "left eigenvector not matched to a right eigenvalue",
                                 {{"re_lambda", bs.values[i].real()}, {"im_lambda", bs.values[i].imag()},
                                  {"distance", best_d}});
        }
        used[best] = true;
        bs.left[i] = ds.right[best];
    }
    biorthonormalize(bs, tol);
}

} // namespace

// ------------------------------------------------------------- vectorize --

Superoperator vectorize(const FockSpace& space, const ModelParams& params, Index max_dim) {
    const Index d = space.dim();
    const Index big = d * d;
    if (big > max_dim) {
        throw NumericalError(ErrorKind::capacity,
                             "superoperator dimension " + std::to_string(big) + " exceeds cap " +
                                 std::to_string(max_dim),
                             {{"required_dim", double(big)}, {"cap", double(max_dim)}});
    }
    Operator h = hamiltonian(space, params);
    DissipatorSpec diss = dissipator_spec(space, params);
    const SparseMatrix id = sparse_identity(d);
    const SparseMatrix ht = h.matrix.transpose();

    SparseMatrix l = SparseMatrix(-kI * (kron(id, h.matrix) - kron(ht, id)));
    for (const auto& j : diss.jumps) {
        const SparseMatrix& lk = j.op.matrix;
        const SparseMatrix ldl = lk.adjoint() * lk;
        const SparseMatrix lbar = lk.conjugate();
        const SparseMatrix ldlt = ldl.transpose();
        l += j.rate * (kron(lbar, lk) - 0.5 * kron(id, ldl) - 0.5 * kron(ldlt, id));
    }
    l.prune(cplx(0.0));
    l.makeCompressed();
    return Superoperator{space, params, std::move(h), std::move(diss), std::move(l)};
}

Superoperator generator(const FockSpace& space, const ModelParams& params) {
    return Superoperator{space, params, hamiltonian(space, params), dissipator_spec(space, params), SparseMatrix()};
}

Vector vec(const DenseMatrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

DenseMatrix unvec(const Vector& v, Index dim) {
    if (v.size() != dim * dim) throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const DenseMatrix>(v.data(), dim, dim);
}

DenseMatrix apply_liouvillian(const Operator& h, const DissipatorSpec& diss, const DenseMatrix& rho) {
    DenseMatrix out = -kI * (h.matrix * rho - (rho * h.matrix).eval());
    for (const auto& j : diss.jumps) {
        const SparseMatrix& l = j.op.matrix;
        const SparseMatrix ld = l.adjoint();
        const SparseMatrix ldl = ld * l;
        const DenseMatrix lr = l * rho;
        out += j.rate * ((lr * ld).eval() - 0.5 * (ldl * rho).eval() - 0.5 * (rho * ldl).eval());
    }
    return out;
}

DenseMatrix apply_dual(const Operator& h, const DissipatorSpec& diss, const DenseMatrix& o) {
    DenseMatrix out = kI * (h.matrix * o - (o * h.matrix).eval());
    for (const auto& j : diss.jumps) {
        const SparseMatrix& l = j.op.matrix;
        const SparseMatrix ld = l.adjoint();
        const SparseMatrix ldl = ld * l;
        const DenseMatrix ldo = ld * o;
        out += j.rate * ((ldo * l).eval() - 0.5 * (ldl * o).eval() - 0.5 * (o * ldl).eval());
    }
    return out;
}

double dual_residual(const FockSpace& space, const ModelParams& params, const Operator& o) {
    if (!(o.space == space)) throw std::invalid_argument("dual_residual: operator space mismatch");
    const Operator h = hamiltonian(space, params);
    const DissipatorSpec diss = dissipator_spec(space, params);
    const DenseMatrix od = o.dense();
    const double norm = od.norm();
    if (norm == 0.0) throw std::invalid_argument("dual_residual: zero operator");
    return apply_dual(h, diss, od).norm() / norm;
}

// -------------------------------------------------------------- spectrum --

int SpectralDecomposition::zero_degeneracy() const {
    int n = 0;
    for (const auto& l : eigenvalues)
        if (std::abs(l) < zero_tolerance) ++n;
    return n;
}

void sort_and_cluster(SpectralDecomposition& dec) {
    const std::size_t n = dec.eigenvalues.size();
    const double tol = dec.cluster_tolerance;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dec.eigenvalues[a].real() > dec.eigenvalues[b].real();
    });
    // Within runs of equal real part: ascending |Im|, Im >= 0 first.
    for (std::size_t s = 0; s < n;) {
        std::size_t e = s + 1;
        while (e < n && std::abs(dec.eigenvalues[order[e]].real() - dec.eigenvalues[order[s]].real()) < tol) ++e;
        std::stable_sort(order.begin() + long(s), order.begin() + long(e), [&](std::size_t a, std::size_t b) {
            const cplx la = dec.eigenvalues[a], lb = dec.eigenvalues[b];
            if (std::abs(std::abs(la.imag()) - std::abs(lb.imag())) >= tol)
                return std::abs(la.imag()) < std::abs(lb.imag());
            return la.imag() > lb.imag() + tol;
        });
        s = e;
    }

    // Assign clusters; eigenvalues within tol of a cluster representative join it.
    std::vector<cplx> reps;
    std::vector<int> cl(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx l = dec.eigenvalues[order[i]];
        int found = -1;
        for (std::size_t c = 0; c < reps.size(); ++c) {
            const bool both_zero = std::abs(reps[c]) < dec.zero_tolerance && std::abs(l) < dec.zero_tolerance;
            if (both_zero || std::abs(reps[c] - l) < tol) {
                found = int(c);
                break;
            }
        }
        if (found < 0) {
            found = int(reps.size());
            reps.push_back(l);
        }
        cl[i] = found;
    }
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return cl[a] < cl[b]; });

    auto permute = [&](auto& v) {
        if (v.empty()) return;
        std::remove_reference_t<decltype(v)> out;
        out.reserve(n);
        for (std::size_t p : pos) out.push_back(v[order[p]]);
        v = std::move(out);
    };
    permute(dec.eigenvalues);
    permute(dec.right);
    permute(dec.left);
    permute(dec.sector);
    permute(dec.residuals);
    dec.cluster.assign(n, 0);
    dec.degeneracy.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        dec.cluster[i] = cl[pos[i]];
        dec.degeneracy[i] = (i > 0 && dec.cluster[i] == dec.cluster[i - 1]) ? dec.degeneracy[i - 1] + 1 : 0;
    }
}

SpectralDecomposition spectrum(const Superoperator& l, int k, const SpectrumOptions& opt) {
    if (k < 1) throw std::invalid_argument("spectrum: k must be >= 1");
    const FockSpace& space = l.space;
    const Index dim = space.dim();
    const Index big = dim * dim;
    const double gamma = l.params.gamma;

    SpectralDecomposition dec;
    dec.space_dim = dim;
    dec.zero_tolerance = 1e-9 * gamma * double(dim);
    dec.cluster_tolerance = dec.zero_tolerance;

    if (opt.strategy == Strategy::dense && big > opt.dense_cap) {
        throw NumericalError(ErrorKind::capacity,
                             "dense spectrum requested for D=" + std::to_string(big) + " above cap " +
                                 std::to_string(opt.dense_cap),
                             {{"required_dim", double(big)}, {"cap", double(opt.dense_cap)}});
    }

    const Operator z = swap_operator(space);
    const Symmetry sym = opt.use_symmetry ? detect_symmetry(l.h, l.diss, z) : Symmetry::none;
    const SparseMatrix pp = parity_basis(space, +1);
    const SparseMatrix pm = parity_basis(space, -1);
    const SparseMatrix id = sparse_identity(dim);
    const cplx sigma = opt.shift;

    auto push = [&](const BlockSpectrum& bs, const Block& blk, bool conj_mirror) {
        for (std::size_t i = 0; i < bs.values.size(); ++i) {
            DenseMatrix r = blk.ps * bs.right[i] * blk.pt.adjoint();
            DenseMatrix lft;
            if (!bs.left.empty()) lft = blk.ps * bs.left[i] * blk.pt.adjoint();
            if (conj_mirror) {
                // (lambda, r) in +- implies (conj lambda, r^dag) in -+.
                dec.eigenvalues.push_back(std::conj(bs.values[i]));
                dec.right.push_back(r.adjoint());
                if (!bs.left.empty()) dec.left.push_back(lft.adjoint());
                dec.sector.push_back("-+");
            } else {
                dec.eigenvalues.push_back(bs.values[i]);
                dec.right.push_back(std::move(r));
                if (!bs.left.empty()) dec.left.push_back(std::move(lft));
                dec.sector.push_back(blk.name);
            }
        }
    };

    if (opt.strategy == Strategy::dense && sym == Symmetry::weak) {
        const SparseMatrix full = l.assembled() ? l.matrix : vectorize(space, l.params, opt.dense_cap).matrix;
        // Weak symmetry: two invariant groups {++, --} and {+-, -+}, assembled from the full matrix.
        const std::vector<std::vector<std::pair<const SparseMatrix*, const SparseMatrix*>>> groups = {
            {{&pp, &pp}, {&pm, &pm}}, {{&pp, &pm}, {&pm, &pp}}};
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            std::vector<SparseMatrix> cols;
            Index width = 0;
            for (const auto& [ps, pt] : groups[gi]) {
                cols.push_back(kron(SparseMatrix(pt->conjugate()), *ps));
                width += cols.back().cols();
            }
            std::vector<Triplet> t;
            Index off = 0;
            for (const auto& c : cols) {
                for (Index j = 0; j < c.outerSize(); ++j)
                    for (SparseMatrix::InnerIterator it(c, j); it; ++it)
                        t.emplace_back(it.row(), off + it.col(), it.value());
                off += c.cols();
            }
            SparseMatrix v(big, width);
            v.setFromTriplets(t.begin(), t.end());
            const DenseMatrix lg = DenseMatrix(SparseMatrix(SparseMatrix(v.adjoint()) * full * v));
            const auto eig = detail::dense_eig(lg, opt.want_left);
            BlockSpectrum bs;
            for (Index i = 0; i < eig.values.size(); ++i) {
                bs.values.push_back(eig.values(i));
                bs.right.push_back(unvec(v * eig.right.col(i), dim));
                if (opt.want_left) bs.left.push_back(unvec(v * eig.left.col(i), dim));
            }
            if (opt.want_left) biorthonormalize(bs, dec.cluster_tolerance);
            push(bs, Block{gi == 0 ? "++/--" : "+-/-+", id, id}, false);
        }
    } else {
        std::vector<Block> blocks;
        if (sym == Symmetry::strong) {
            blocks = {{"++", pp, pp}, {"--", pm, pm}, {"+-", pp, pm}};
        } else {
            blocks = {{"full", id, id}};
        }
        for (const auto& blk : blocks) {
            const BlockGenerator g = make_block(l.h, l.diss, blk, false);
            const Index n = g.rows() * g.cols();
            const bool dense = opt.strategy == Strategy::dense || n <= 400 || k >= n - 2;
            BlockSpectrum bs = dense ? dense_block(g, false, dec.cluster_tolerance)
                                     : arnoldi_block(g, k, sigma, opt);
            if (opt.want_left) {
                const BlockGenerator gd = make_block(l.h, l.diss, blk, true);
                attach_left(bs, gd, sigma, opt, dec.cluster_tolerance, dense);
            }
            push(bs, blk, false);
            if (blk.name == "+-") push(bs, blk, true);
        }
    }

    for (std::size_t i = 0; i < dec.eigenvalues.size(); ++i) {
        const DenseMatrix res = apply_liouvillian(l.h, l.diss, dec.right[i]) - dec.eigenvalues[i] * dec.right[i];
        dec.residuals.push_back(res.norm() / dec.right[i].norm());
    }

    sort_and_cluster(dec);
    if (dec.eigenvalues.size() > std::size_t(k)) {
        dec.eigenvalues.resize(k);
        dec.right.resize(k);
        if (!dec.left.empty()) dec.left.resize(k);
        dec.sector.resize(k);
        dec.residuals.resize(k);
        dec.cluster.resize(k);
        dec.degeneracy.resize(k);
    }
    return dec;
}

std::vector<cplx> gaps(const SpectralDecomposition& dec, int m) {
    std::vector<cplx> out;
    const double tol = dec.cluster_tolerance;
    int last_cluster = -1;
    for (std::size_t i = 0; i < dec.size() && int(out.size()) < m; ++i) {
        if (dec.cluster[i] == last_cluster) continue;
        last_cluster = dec.cluster[i];
        const cplx l = dec.eigenvalues[i];
        if (std::abs(l) < dec.zero_tolerance) continue;
        cplx rep = l.imag() < 0 ? std::conj(l) : l;
        bool seen = false;
        for (const auto& g : out)
            if (std::abs(g - rep) < tol) seen = true;
        if (!seen) out.push_back(rep);
    }
    if (int(out.size()) < m) {
        throw std::invalid_argument("gaps: decomposition holds only " + std::to_string(out.size()) +
                                    " nonzero clusters, " + std::to_string(m) + " requested");
    }
    return out;
}

// --------------------------------------------------------- steady states --

DenseMatrix SteadyStateSet::reconstruct(const DenseMatrix& rho0) const {
    if (!r02) return r01;
    const cplx c02 = (z2 * rho0).trace();
    return r01 + c02.real() * (*r02);
}

SteadyStateSet steady_states(const SpectralDecomposition& dec, const Operator& z2) {
    std::vector<std::size_t> zero;
    for (std::size_t i = 0; i < dec.size(); ++i)
        if (std::abs(dec.eigenvalues[i]) < dec.zero_tolerance) zero.push_back(i);
    if (zero.empty() || zero.size() > 2) {
        throw NumericalError(ErrorKind::unsupported_degeneracy,
                             "zero-eigenvalue degeneracy " + std::to_string(zero.size()) + " is not 1 or 2",
                             {{"degeneracy", double(zero.size())}});
    }
    SteadyStateSet out;
    out.z2 = z2.matrix;
    auto herm = [](const DenseMatrix& x) { return DenseMatrix(0.5 * (x + x.adjoint())); };

    if (zero.size() == 1) {
        const DenseMatrix& r = dec.right[zero[0]];
        const cplx tr = r.trace();
        if (std::abs(tr) < 1e-12 * r.norm()) {
            throw NumericalError(ErrorKind::ill_conditioned, "steady state has vanishing trace",
                                 {{"abs_trace", std::abs(tr)}});
        }
        out.r01 = herm(r / tr);
    } else {
        const DenseMatrix& ra = dec.right[zero[0]];
        const DenseMatrix& rb = dec.right[zero[1]];
        Eigen::Matrix2cd m;
        m << ra.trace(), rb.trace(), (z2.matrix * ra).trace(), (z2.matrix * rb).trace();
        Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m);
        const double cond = svd.singularValues()(0) / svd.singularValues()(1);
        if (!(cond < 1e10)) {
            throw NumericalError(ErrorKind::ill_conditioned, "trace / swap-trace system is singular",
                                 {{"condition", cond}});
        }
        const Eigen::Matrix2cd mi = m.inverse();
        out.r01 = herm(mi(0, 0) * ra + mi(1, 0) * rb);
        out.r02 = herm(mi(0, 1) * ra + mi(1, 1) * rb);
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(out.r01, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues()(0);
    if (out.min_eigenvalue < -1e-8) {
        throw NumericalError(ErrorKind::positivity, "steady state r01 is not positive",
                             {{"min_eigenvalue", out.min_eigenvalue}});
    }
    return out;
}

SteadyStateSet compute_steady_states(const FockSpace& space, const ModelParams& params, SpectrumOptions options) {
    const Index big = space.dim() * space.dim();
    options.want_left = false;
    if (big > options.dense_cap) options.strategy = Strategy::shift_invert;
    const Superoperator l = big > options.dense_cap ? generator(space, params) : vectorize(space, params);
    const SpectralDecomposition dec = spectrum(l, 4, options);
    return steady_states(dec, swap_operator(space));
}

} // namespace bhd
