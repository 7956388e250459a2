#pragma once

// Model-agnostic view of a marked point process: the conditional intensity
// after a given history. Shared by the neural model and the analytic
// baselines so that sampling, prediction and diagnostics run on either.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "nextpp/events.hpp"

namespace nextpp {

// λ(t, m | history) for t after the history's last event. Implementations
// must be monotone in t for each mark between events (true for every
// process in this library); the thinning bound relies on it.
class ConditionalIntensity {
public:
    virtual ~ConditionalIntensity() = default;

    virtual std::size_t mark_count() const = 0;
    // Time of the last conditioning event (0 for an empty history).
    virtual double last_time() const = 0;
    virtual double intensity(double t, std::size_t mark) const = 0;

    virtual double total_intensity(double t) const;
    // ∫_{last_time}^{t} Σ_m λ(s, m) ds. The default uses the trapezoid rule
    // with `quadrature_points` sub-intervals.
    virtual double integrated_total(double t) const;

    std::size_t quadrature_points = 64;
};

class PointProcess {
public:
    virtual ~PointProcess() = default;

    virtual std::size_t mark_count() const = 0;
    virtual std::string name() const = 0;

    // states[k] conditions on the first k events (k = 0..L).
    virtual std::vector<std::unique_ptr<ConditionalIntensity>> states(
        const EventSequence& seq) const = 0;

    // Conditioning on a whole (possibly empty) prefix.
    virtual std::unique_ptr<ConditionalIntensity> state_after(const EventSequence& prefix) const;

    // Log-likelihood over [t_1, t_L], all L log-intensity terms included.
    virtual double log_likelihood(const EventSequence& seq) const;
};

// Σ_i log λ(t_i, m_i | state_{i-1}) − Σ_{i>=1} ∫_{t_i}^{t_{i+1}} Σ_m λ, using
// each state's integrated_total.
double log_likelihood_from_states(const PointProcess& process, const EventSequence& seq);

}  // namespace nextpp
