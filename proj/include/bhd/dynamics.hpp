// Master-equation propagation, quantum-jump trajectories, g2(tau), Q-functions.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bhd/analysis.hpp"
#include "bhd/hilbert.hpp"
#include "bhd/model.hpp"
#include "bhd/spectral.hpp"

namespace bhd {

struct Record {
    std::string name;
    std::vector<cplx> values;
};

struct PropagationResult {
    std::vector<double> times;
    std::vector<Record> records;
    DenseMatrix final_rho;  // master equation
    Vector final_psi;       // trajectories (normalized)
    int jumps{0};

    const Record& record(const std::string& name) const;
};

struct MasterOptions {
    double rtol{1e-8};
    double atol{1e-10};
};

PropagationResult evolve_master(const FockSpace& space, const ModelParams& params, const DenseMatrix& rho0,
                                const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                                const MasterOptions& options = {});

struct TrajectoryOptions {
    double rtol{1e-9};
    double atol{1e-11};
    double jump_time_rtol{1e-6};
};

PropagationResult mcwf_trajectory(const FockSpace& space, const ModelParams& params, const StateVector& psi0,
                                  const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                                  std::uint64_t seed, const TrajectoryOptions& options = {});

// Per-trajectory seed derivation.
std::uint64_t strong_mix(std::uint64_t master_seed, std::uint64_t index);

struct EnsembleSeries {
    std::string name;
    std::vector<cplx> mean;
    std::optional<std::vector<double>> stderr_re; // absent when n_traj == 1
    std::optional<std::vector<double>> stderr_im;
};

struct TrajectoryEnsemble {
    int n_traj{0};
    std::uint64_t master_seed{0};
    std::vector<double> times;
    std::vector<PropagationResult> trajectories;
    std::vector<EnsembleSeries> series;
    long total_jumps{0};

    const EnsembleSeries& get(const std::string& name) const;
};

struct EnsembleOptions {
    int threads{1};
    bool keep_trajectories{true};
    TrajectoryOptions trajectory{};
};

TrajectoryEnsemble ensemble(const FockSpace& space, const ModelParams& params, const StateVector& psi0,
                            const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                            int n_traj, std::uint64_t master_seed, const EnsembleOptions& options = {});

// g2(tau) = Tr[a^dag a e^{tau L}(rho')] / Tr[a^dag a rho_ss], rho' = a rho_ss a^dag / <a^dag a>.
std::vector<double> g2_tau(const FockSpace& space, const ModelParams& params, const DenseMatrix& rho_ss, Mode mode,
                           const std::vector<double>& tau_grid, const MasterOptions& options = {});

// tau -> infinity limit of g2 through the steady-state projection of rho'.
double g2_long_time(const SteadyStateSet& ss, const DenseMatrix& rho_ss, const FockSpace& space, Mode mode);

struct QGrid {
    double x_min{-2}, x_max{2};
    int nx{81};
    double y_min{-2}, y_max{2};
    int ny{81};
};

struct QFunction {
    std::vector<double> x; // rescaled: Re(alpha)/sqrt(N)
    std::vector<double> y;
    Eigen::MatrixXd values; // values(iy, ix)
    double edge_mass{0.0};  // population of the highest kept Fock level
    bool edge_warning{false};

    // Riemann sum of Q over the grid in alpha units.
    double integral(double n_scale) const;
};

QFunction q_function(const FockSpace& space, const DenseMatrix& rho, Mode mode, const QGrid& grid, double n_scale);

} // namespace bhd
