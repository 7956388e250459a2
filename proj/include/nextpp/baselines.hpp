#pragma once

// Ground-truth synthetic processes: homogeneous Poisson and multivariate
// Hawkes with a shared exponential kernel a[m][l] e^{-b (t - t_j)}.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "nextpp/events.hpp"
#include "nextpp/process.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

struct PoissonParams {
    std::vector<double> rates;  // μ_m > 0

    std::size_t mark_count() const { return rates.size(); }
    void validate() const;
};

struct HawkesParams {
    std::vector<double> base;                     // μ_m > 0
    std::vector<std::vector<double>> excitation;  // a[target][source] >= 0
    double decay = 1.0;                           // b > 0

    std::size_t mark_count() const { return base.size(); }
    double spectral_radius() const;  // of a / b
    // Throws ContractError, including when the spectral radius is >= 1.
    void validate() const;

    // M = 2, μ = (0.2, 0.2), a = [[0.6, 0.1], [0.1, 0.6]], b = 1.
    static HawkesParams benchmark();
};

// Default benchmark layout.
inline constexpr double kBenchmarkHorizon = 100.0;
inline constexpr std::size_t kBenchmarkTrain = 400;
inline constexpr std::size_t kBenchmarkDev = 50;
inline constexpr std::size_t kBenchmarkTest = 100;

// Sequences on [0, T]. A draw with no events is dropped, so the result can
// hold fewer than n_seqs sequences when T Σ μ is small.
Dataset generate_poisson(const PoissonParams& params, double horizon, std::size_t n_seqs, Rng& rng);
Dataset generate_hawkes(const HawkesParams& params, double horizon, std::size_t n_seqs, Rng& rng);

class PoissonProcess : public PointProcess {
public:
    explicit PoissonProcess(PoissonParams params);

    std::size_t mark_count() const override { return params_.mark_count(); }
    std::string name() const override { return "poisson"; }
    std::vector<std::unique_ptr<ConditionalIntensity>> states(const EventSequence& seq) const override;
    double log_likelihood(const EventSequence& seq) const override;

    const PoissonParams& params() const { return params_; }

private:
    PoissonParams params_;
};

class HawkesProcess : public PointProcess {
public:
    explicit HawkesProcess(HawkesParams params);

    std::size_t mark_count() const override { return params_.mark_count(); }
    std::string name() const override { return "hawkes"; }
    std::vector<std::unique_ptr<ConditionalIntensity>> states(const EventSequence& seq) const override;
    double log_likelihood(const EventSequence& seq) const override;

    const HawkesParams& params() const { return params_; }

private:
    HawkesParams params_;
};

// Exact per-event log-likelihood over the window [t_1, t_L] of every
// sequence: Σ LL / Σ L.
double oracle_loglik(const Dataset& data, const PointProcess& oracle);

// μ_m = N_m / Σ (t_L - t_1), the maximiser of the windowed Poisson
// likelihood.
PoissonParams fit_poisson(const Dataset& data);

}  // namespace nextpp
