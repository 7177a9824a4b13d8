// Shared adaptive dense-output integration on a real-interleaved state.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include "bhd/errors.hpp"

namespace bhd::detail {

using RealState = Eigen::VectorXd;
using Dopri5 = boost::numeric::odeint::runge_kutta_dopri5<RealState, double, RealState, double,
                                                          boost::numeric::odeint::vector_space_algebra>;
using DenseStepper = boost::numeric::odeint::dense_output_runge_kutta<
    boost::numeric::odeint::controlled_runge_kutta<Dopri5>>;

inline DenseStepper make_stepper(double rtol, double atol) {
    return boost::numeric::odeint::make_dense_output(atol, rtol, Dopri5());
}

inline double initial_dt(double span) { return std::max(1e-6, std::min(1e-2, 1e-3 * span)); }

// One adaptive step with an underflow guard.
template <class System>
void guarded_step(DenseStepper& stepper, System& sys) {
    stepper.do_step(sys);
    const double t = stepper.current_time();
    const double dt = t - stepper.previous_time();
    if (!(dt > 1e-13 * std::max(1.0, std::abs(t)))) {
        throw NumericalError(ErrorKind::step_underflow,
                             "adaptive step size underflow at t = " + std::to_string(t),
                             {{"time", t}, {"dt", dt}});
    }
}

// Integrate from grid[0] and call observe(i, state) at every grid point.
template <class System, class Observer>
void integrate_on_grid(System sys, RealState& x, const std::vector<double>& grid, double rtol, double atol,
                       Observer observe) {
    if (grid.empty()) return;
    const double span = grid.back() - grid.front();
    DenseStepper stepper = make_stepper(rtol, atol);
    stepper.initialize(x, grid.front(), initial_dt(span));
    observe(std::size_t(0), x);
    RealState tmp(x.size());
    for (std::size_t i = 1; i < grid.size(); ++i) {
        while (stepper.current_time() < grid[i]) guarded_step(stepper, sys);
        stepper.calc_state(grid[i], tmp);
        observe(i, tmp);
    }
    if (grid.size() > 1) x = tmp;
}

inline void check_grid(const std::vector<double>& grid, const char* who) {
    if (grid.empty()) throw std::invalid_argument(std::string(who) + ": empty time grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument(std::string(who) + ": time grid must be strictly increasing");
        }
    }
}

} // namespace bhd::detail
