#include "nextpp/ode.hpp"

#include <string>
#include <vector>

#include "nextpp/errors.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {

Var ode_solve(const OdeField& field, const Var& z0, std::span<const double> t0,
              std::span<const double> t1, const OdeSolverConfig& cfg) {
    if (cfg.step_count < 1) throw ContractError("ode step_count must be >= 1");
    if (z0.value().rank() != 2) throw DimensionError("ode_solve expects an R x d state matrix");
    const std::size_t R = z0.shape()[0];
    if (t0.size() != R || t1.size() != R) throw DimensionError("ode_solve: one interval per row");
    if (!z0.value().all_finite()) throw NumericError("ode_solve: non-finite initial state");

    std::vector<double> h(R), half(R), sixth(R), t(R), t_half(R), t_next(R);
    bool any_nonzero = false;
    for (std::size_t r = 0; r < R; ++r) {
        if (!(t1[r] >= t0[r])) throw ContractError("ode_solve: t1 < t0 in row " + std::to_string(r));
        h[r] = (t1[r] - t0[r]) / static_cast<double>(cfg.step_count);
        half[r] = 0.5 * h[r];
        sixth[r] = h[r] / 6.0;
        any_nonzero = any_nonzero || h[r] != 0.0;
    }
    if (!any_nonzero) return z0;

    auto eval = [&](const Var& z, std::span<const double> times, std::size_t step) {
        try {
            Var dz = field(z, times);
            if (dz.shape() != z.shape()) throw DimensionError("ode field changed the state shape");
            return dz;
        } catch (const NumericError& e) {
            throw NumericError("ode_solve step " + std::to_string(step) + ": " + e.what());
        }
    };

    Var z = z0;
    for (std::size_t s = 0; s < cfg.step_count; ++s) {
        for (std::size_t r = 0; r < R; ++r) {
            t[r] = t0[r] + static_cast<double>(s) * h[r];
            t_half[r] = t[r] + half[r];
            t_next[r] = t0[r] + static_cast<double>(s + 1) * h[r];
        }
        Var k1 = eval(z, t, s);
        Var k2 = eval(ops::add(z, ops::scale_rows(k1, half)), t_half, s);
        Var k3 = eval(ops::add(z, ops::scale_rows(k2, half)), t_half, s);
        Var k4 = eval(ops::add(z, ops::scale_rows(k3, h)), t_next, s);
        Var incr = ops::add(ops::add(k1, ops::scale(ops::add(k2, k3), 2.0)), k4);
        z = ops::add(z, ops::scale_rows(incr, sixth));
    }
    return z;
}

Var ode_solve(const OdeField& field, const Var& z0, double t0, double t1,
              const OdeSolverConfig& cfg) {
    const std::size_t R = z0.value().rank() == 2 ? z0.shape()[0] : 0;
    std::vector<double> a(R, t0), b(R, t1);
    return ode_solve(field, z0, a, b, cfg);
}

}  // namespace nextpp
