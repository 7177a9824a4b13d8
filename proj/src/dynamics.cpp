#include "bhd/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

#include "bhd/errors.hpp"
#include "ode.hpp"

namespace bhd {

namespace {

using detail::RealState;

Eigen::Map<const Vector> as_complex(const RealState& x) {
    return Eigen::Map<const Vector>(reinterpret_cast<const cplx*>(x.data()), x.size() / 2);
}

Eigen::Map<Vector> as_complex(RealState& x) {
    return Eigen::Map<Vector>(reinterpret_cast<cplx*>(x.data()), x.size() / 2);
}

RealState to_real(const Vector& v) {
    RealState x(2 * v.size());
    as_complex(x) = v;
    return x;
}

std::vector<Record> empty_records(const std::vector<Observable>& obs, std::size_t n) {
    std::vector<Record> out;
    for (const auto& o : obs) out.push_back({o.name, std::vector<cplx>(n)});
    return out;
}

void check_density_matrix(const DenseMatrix& rho, Index dim) {
    if (rho.rows() != dim || rho.cols() != dim) throw std::invalid_argument("evolve_master: rho0 dimension mismatch");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-8) throw std::invalid_argument("evolve_master: rho0 not Hermitian");
    if (std::abs(rho.trace() - 1.0) > 1e-8) throw std::invalid_argument("evolve_master: rho0 trace differs from 1");
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-8) throw std::invalid_argument("evolve_master: rho0 not positive");
}

// Sum in a fixed pairwise order so the result does not depend on scheduling.
template <class T, class Get>
T pairwise_sum(std::size_t lo, std::size_t hi, const Get& get) {
    if (hi - lo == 1) return get(lo);
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum<T>(lo, mid, get) + pairwise_sum<T>(mid, hi, get);
}

} // namespace

const Record& PropagationResult::record(const std::string& name) const {
    for (const auto& r : records)
        if (r.name == name) return r;
    throw std::out_of_range("no record named '" + name + "'");
}

const EnsembleSeries& TrajectoryEnsemble::get(const std::string& name) const {
    for (const auto& s : series)
        if (s.name == name) return s;
    throw std::out_of_range("no series named '" + name + "'");
}

// --------------------------------------------------------- master equation --

PropagationResult evolve_master(const FockSpace& space, const ModelParams& params, const DenseMatrix& rho0,
                                const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                                const MasterOptions& options) {
    detail::check_grid(t_grid, "evolve_master");
    const Index dim = space.dim();
    check_density_matrix(rho0, dim);
    const Superoperator l = vectorize(space, params);

    PropagationResult out;
    out.times = t_grid;
    out.records = empty_records(observables, t_grid.size());

    auto sys = [&](const RealState& x, RealState& dx, double) {
        dx.resize(x.size());
        as_complex(dx).noalias() = l.matrix * as_complex(x);
    };
    RealState x = to_real(vec(rho0));
    detail::integrate_on_grid(sys, x, t_grid, options.rtol, options.atol, [&](std::size_t i, const RealState& s) {
        const Eigen::Map<const DenseMatrix> rho(reinterpret_cast<const cplx*>(s.data()), dim, dim);
        for (std::size_t k = 0; k < observables.size(); ++k)
            out.records[k].values[i] = expectation(DenseMatrix(rho), observables[k].op);
    });
    out.final_rho = Eigen::Map<const DenseMatrix>(reinterpret_cast<const cplx*>(x.data()), dim, dim);
    return out;
}

// ------------------------------------------------------------ trajectories --

std::uint64_t strong_mix(std::uint64_t master_seed, std::uint64_t index) {
    // Two rounds of the splitmix64 finalizer over (seed, index).
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(master_seed) ^ mix(index + 0x632be59bd9b4e019ULL));
}

PropagationResult mcwf_trajectory(const FockSpace& space, const ModelParams& params, const StateVector& psi0,
                                  const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                                  std::uint64_t seed, const TrajectoryOptions& options) {
    detail::check_grid(t_grid, "mcwf_trajectory");
    if (!(psi0.space == space)) throw std::invalid_argument("mcwf_trajectory: space mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw std::invalid_argument("mcwf_trajectory: psi0 must have unit norm");

    const Operator h = hamiltonian(space, params);
    const DissipatorSpec diss = dissipator_spec(space, params);
    const SparseMatrix mih = SparseMatrix(-kI * effective_hamiltonian(h, diss));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto draw = [&] {
        double r;
        do r = uniform(rng);
        while (r <= 0.0);
        return r;
    };

    PropagationResult out;
    out.times = t_grid;
    out.records = empty_records(observables, t_grid.size());
    auto record = [&](std::size_t i, const Vector& psi) {
        for (std::size_t k = 0; k < observables.size(); ++k)
            out.records[k].values[i] = expectation(psi, observables[k].op);
        if (i + 1 == t_grid.size()) out.final_psi = psi / psi.norm();
    };

    auto sys = [&](const RealState& x, RealState& dx, double) {
        dx.resize(x.size());
        as_complex(dx).noalias() = mih * as_complex(x);
    };

    const double span = t_grid.back() - t_grid.front();
    RealState x = to_real(psi0.amplitudes);
    record(0, psi0.amplitudes);
    double r = draw();
    std::size_t next = 1;
    auto stepper = detail::make_stepper(options.rtol, options.atol);
    stepper.initialize(x, t_grid.front(), detail::initial_dt(span));
    RealState tmp(x.size());

    while (next < t_grid.size()) {
        detail::guarded_step(stepper, sys);
        const double t0 = stepper.previous_time();
        const double t1 = stepper.current_time();
        const double norm1 = as_complex(stepper.current_state()).squaredNorm();

        double t_jump = t1 + 1.0;
        if (norm1 < r) {
            // Bisection on ||psi(t)||^2 = r inside the last step.
            double lo = t0, hi = t1;
            while (hi - lo > options.jump_time_rtol * std::max(1.0, std::abs(hi))) {
                const double mid = 0.5 * (lo + hi);
                stepper.calc_state(mid, tmp);
                if (as_complex(tmp).squaredNorm() > r) lo = mid;
                else hi = mid;
            }
            t_jump = hi;
        }

        while (next < t_grid.size() && t_grid[next] <= std::min(t1, t_jump)) {
            stepper.calc_state(t_grid[next], tmp);
            record(next, as_complex(tmp));
            ++next;
        }

        if (t_jump <= t1) {
            stepper.calc_state(t_jump, tmp);
            const Vector psi = as_complex(tmp);
            std::vector<double> weights;
            std::vector<Vector> candidates;
            double total = 0.0;
            for (const auto& j : diss.jumps) {
                candidates.push_back(j.op.matrix * psi);
                weights.push_back(j.rate * candidates.back().squaredNorm());
                total += weights.back();
            }
            if (total > 0.0) {
                double u = uniform(rng) * total;
                std::size_t k = 0;
                while (k + 1 < weights.size() && u >= weights[k]) u -= weights[k++];
                Vector after = candidates[k] / candidates[k].norm();
                x = to_real(after);
                ++out.jumps;
            } else {
                x = to_real(Vector(psi / psi.norm()));
            }
            r = draw();
            stepper.initialize(x, t_jump, std::max(1e-6, stepper.current_time_step()));
        }
    }
    return out;
}

TrajectoryEnsemble ensemble(const FockSpace& space, const ModelParams& params, const StateVector& psi0,
                            const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                            int n_traj, std::uint64_t master_seed, const EnsembleOptions& options) {
    if (n_traj < 1) throw std::invalid_argument("ensemble: n_traj must be >= 1");
    std::vector<PropagationResult> runs(n_traj);
    std::atomic<int> counter{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const int i = counter.fetch_add(1);
            if (i >= n_traj) return;
            try {
                runs[i] = mcwf_trajectory(space, params, psi0, t_grid, observables,
                                          strong_mix(master_seed, std::uint64_t(i)), options.trajectory);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                counter = n_traj;
            }
        }
    };
    const int threads = std::clamp(options.threads, 1, n_traj);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    TrajectoryEnsemble ens;
    ens.n_traj = n_traj;
    ens.master_seed = master_seed;
    ens.times = t_grid;
    for (const auto& r : runs) ens.total_jumps += r.jumps;
    const std::size_t nt = t_grid.size();
    for (std::size_t k = 0; k < observables.size(); ++k) {
        EnsembleSeries s;
        s.name = observables[k].name;
        s.mean.resize(nt);
        std::vector<double> se_re(nt), se_im(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            const cplx mean = pairwise_sum<cplx>(0, std::size_t(n_traj), [&](std::size_t i) {
                return runs[i].records[k].values[t];
            }) / double(n_traj);
            s.mean[t] = mean;
            if (n_traj > 1) {
                const double vr = pairwise_sum<double>(0, std::size_t(n_traj), [&](std::size_t i) {
                    const double d = runs[i].records[k].values[t].real() - mean.real();
                    return d * d;
                }) / double(n_traj - 1);
                const double vi = pairwise_sum<double>(0, std::size_t(n_traj), [&](std::size_t i) {
                    const double d = runs[i].records[k].values[t].imag() - mean.imag();
                    return d * d;
                }) / double(n_traj - 1);
                se_re[t] = std::sqrt(vr / n_traj);
                se_im[t] = std::sqrt(vi / n_traj);
            }
        }
        if (n_traj > 1) {
            s.stderr_re = std::move(se_re);
            s.stderr_im = std::move(se_im);
        }
        ens.series.push_back(std::move(s));
    }
    if (options.keep_trajectories) ens.trajectories = std::move(runs);
    return ens;
}

// --------------------------------------------------------------------- g2 --

namespace {

struct PreparedG2 {
    SparseMatrix a;
    SparseMatrix n;
    double occupation;
    DenseMatrix rho_prime;
};

PreparedG2 prepare_g2(const FockSpace& space, const DenseMatrix& rho_ss, Mode mode) {
    if (mode != Mode::one && mode != Mode::two) throw std::invalid_argument("g2: mode must be one or two");
    PreparedG2 p;
    p.a = annihilation(space, mode).matrix;
    p.n = number(space, mode).matrix;
    p.occupation = expectation(rho_ss, p.n).real();
    if (!(p.occupation > 1e-12)) {
        throw NumericalError(ErrorKind::undefined_correlation, "g2: vanishing occupation",
                             {{"occupation", p.occupation}});
    }
    const DenseMatrix ar = p.a * rho_ss;
    p.rho_prime = (ar * SparseMatrix(p.a.adjoint())) / p.occupation;
    p.rho_prime = 0.5 * (p.rho_prime + p.rho_prime.adjoint()).eval();
    return p;
}

} // namespace

std::vector<double> g2_tau(const FockSpace& space, const ModelParams& params, const DenseMatrix& rho_ss, Mode mode,
                           const std::vector<double>& tau_grid, const MasterOptions& options) {
    const PreparedG2 p = prepare_g2(space, rho_ss, mode);
    const auto res = evolve_master(space, params, p.rho_prime, tau_grid, {{"n", p.n}}, options);
    std::vector<double> out;
    for (const auto& v : res.records[0].values) out.push_back(v.real() / p.occupation);
    return out;
}

double g2_long_time(const SteadyStateSet& ss, const DenseMatrix& rho_ss, const FockSpace& space, Mode mode) {
    const PreparedG2 p = prepare_g2(space, rho_ss, mode);
    return expectation(ss.reconstruct(p.rho_prime), p.n).real() / p.occupation;
}

// ------------------------------------------------------------- Q function --

double QFunction::integral(double n_scale) const {
    if (x.size() < 2 || y.size() < 2) return 0.0;
    const double dx = (x.back() - x.front()) / double(x.size() - 1);
    const double dy = (y.back() - y.front()) / double(y.size() - 1);
    return values.sum() * dx * dy * n_scale;
}

QFunction q_function(const FockSpace& space, const DenseMatrix& rho, Mode mode, const QGrid& grid, double n_scale) {
    if (grid.nx < 2 || grid.ny < 2) throw std::invalid_argument("q_function: grid needs at least 2 points per axis");
    if (!(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min)) throw std::invalid_argument("q_function: empty grid");
    const DenseMatrix red = reduced_density(space, rho, mode);
    const int c = space.cutoff();
    QFunction q;
    q.edge_mass = red(c, c).real();
    q.edge_warning = q.edge_mass > 1e-3;
    const double rs = std::sqrt(n_scale);
    for (int i = 0; i < grid.nx; ++i) q.x.push_back(grid.x_min + (grid.x_max - grid.x_min) * i / (grid.nx - 1));
    for (int i = 0; i < grid.ny; ++i) q.y.push_back(grid.y_min + (grid.y_max - grid.y_min) * i / (grid.ny - 1));
    q.values.resize(grid.ny, grid.nx);
    Vector coh(c + 1);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const cplx alpha = rs * cplx(q.x[ix], q.y[iy]);
            coh(0) = std::exp(-0.5 * std::norm(alpha));
            for (int n = 1; n <= c; ++n) coh(n) = coh(n - 1) * alpha / std::sqrt(double(n));
            q.values(iy, ix) = coh.dot(red * coh).real() / std::numbers::pi;
        }
    }
    return q;
}

} // namespace bhd
