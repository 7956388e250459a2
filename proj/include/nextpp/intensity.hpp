#pragma once

// Conditional intensity
//   λ(t, m) = γ_m softplus((α_m (t - t_i) + W_m·C_i + b_m + β_m) / γ_m)
// with γ_m = softplus(raw_γ_m) + 1e-4.

#include <cstddef>
#include <span>
#include <vector>

#include "nextpp/autodiff.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

inline constexpr double kGammaFloor = 1e-4;

// Stable γ log(1 + exp(x / γ)). Throws DomainError unless γ > 0.
double scaled_softplus(double x, double gamma);
double gamma_from_raw(double raw);
double softplus_inverse(double y);

// Registers intensity.{alpha, w, b, beta, gamma_raw, c0}. `initial_rates`
// (length M) sets β so the initial intensity roughly matches the data.
void register_intensity_params(ParamStore& params, std::size_t mark_count, std::size_t model_dim,
                               std::span<const double> initial_rates, Rng& rng);

// Plain-value intensity parameters.
struct IntensityParams {
    std::vector<double> alpha;      // M
    Tensor readout;                 // D x M (column m is W_m)
    std::vector<double> bias;       // M
    std::vector<double> base_rate;  // M (β)
    std::vector<double> gamma_raw;  // M

    static IntensityParams from_store(const ParamStore& params);
    std::size_t mark_count() const { return alpha.size(); }
    double gamma(std::size_t m) const { return gamma_from_raw(gamma_raw[m]); }
};

// λ given the elapsed time since the conditioning event and its fused row.
struct IntensityQuery {
    double elapsed = 0.0;             // t - t_i >= 0
    std::span<const double> c_row;    // C_i, length D
};

double intensity_at(const IntensityQuery& q, std::size_t mark, const IntensityParams& p);
double total_intensity_at(const IntensityQuery& q, const IntensityParams& p);

// Per-mark pre-activation offsets W_m·C + b_m + β_m for one fused row.
std::vector<double> intensity_offsets(std::span<const double> c_row, const IntensityParams& p);

// Differentiable view used by the likelihood.
struct IntensityVars {
    Var alpha;  // M
    Var readout;  // D x M
    Var offset;   // M, b + β
    Var gamma;    // M, softplus(raw) + floor
    Var c0;       // 1 x D, representation before the first event
};

IntensityVars intensity_vars(Tape& tape);

// (R x D) rows -> (R x M) pre-activation offsets.
Var intensity_base(const Var& C, const IntensityVars& v);

}  // namespace nextpp
