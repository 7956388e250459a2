#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "nextpp/autodiff.hpp"

namespace nextpp {

// Fixed-step classical fourth-order Runge-Kutta; the only method offered.
struct OdeSolverConfig {
    std::size_t step_count = 8;  // steps per integration interval
};

// Vector field evaluated on a batch of states: row r of `z` is at time t[r].
using OdeField = std::function<Var(const Var& z, std::span<const double> t)>;

// Integrates every row of `z0` (R x d) from t0[r] to t1[r] with step_count
// RK4 steps of size (t1[r] - t0[r]) / step_count. Gradients flow through the
// unrolled steps. Rows with t1 == t0 come back bit-identical.
Var ode_solve(const OdeField& field, const Var& z0, std::span<const double> t0,
              std::span<const double> t1, const OdeSolverConfig& cfg);

// Single shared interval for all rows.
Var ode_solve(const OdeField& field, const Var& z0, double t0, double t1,
              const OdeSolverConfig& cfg);

}  // namespace nextpp
